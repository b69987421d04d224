#include "cdaug/codec.hpp"

#include <cmath>
#include <limits>

#include "cdaug/error.hpp"

namespace cdaug {

using nlohmann::json;

namespace {

template <class Fn>
auto wrap_json_errors(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kValidation, std::string(what) + ": " + e.what());
  }
}

std::vector<std::string_view> split_lines(std::string_view bytes) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < bytes.size()) {
    auto end = bytes.find('\n', start);
    if (end == std::string_view::npos) end = bytes.size();
    const auto line = bytes.substr(start, end - start);
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

}  // namespace

void to_json(json& j, const HistoryPair& pair) {
  j = json{{"input", pair.input}, {"output", pair.output}, {"timestamp", pair.timestamp}};
}

void from_json(const json& j, HistoryPair& pair) {
  j.at("input").get_to(pair.input);
  j.at("output").get_to(pair.output);
  pair.timestamp = j.value("timestamp", std::int64_t{0});
}

void to_json(json& j, const UserProfile& profile) {
  j = json{{"user_id", profile.user_id}, {"task", to_string(profile.task)}, {"history", profile.history}};
}

void from_json(const json& j, UserProfile& profile) {
  j.at("user_id").get_to(profile.user_id);
  profile.task = parse_task_id(j.at("task").get<std::string>());
  j.at("history").get_to(profile.history);
}

void to_json(json& j, const GenerationConfig& config) {
  j = json{{"k", config.k}, {"temperature", config.temperature}, {"max_output_tokens", config.max_output_tokens}};
  if (config.seed) j["seed"] = *config.seed;
}

void from_json(const json& j, GenerationConfig& config) {
  config = GenerationConfig{};
  if (j.contains("k")) {
    const auto& k = j.at("k");
    if (!k.is_number_integer() || (!k.is_number_unsigned() && k.get<std::int64_t>() < 0)) {
      throw Error(ErrorKind::kValidation, "k must be a non-negative integer");
    }
    j.at("k").get_to(config.k);
  }
  if (j.contains("temperature")) j.at("temperature").get_to(config.temperature);
  if (j.contains("max_output_tokens")) j.at("max_output_tokens").get_to(config.max_output_tokens);
  if (j.contains("seed") && !j.at("seed").is_null()) config.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(json& j, const FilterThresholds& thresholds) {
  j = json{{"scf", thresholds.scf},
           {"tdf", thresholds.tdf},
           {"min_len_ratio", thresholds.min_len_ratio},
           {"tdf_measure", thresholds.tdf_measure == DiversityMeasure::kF1 ? "f1" : "recall"}};
  // JSON has no infinity; null marks an unbounded ratio.
  if (std::isinf(thresholds.max_len_ratio)) j["max_len_ratio"] = nullptr;
  else j["max_len_ratio"] = thresholds.max_len_ratio;
}

void from_json(const json& j, FilterThresholds& thresholds) {
  thresholds = FilterThresholds{};
  if (j.contains("scf")) j.at("scf").get_to(thresholds.scf);
  if (j.contains("tdf")) j.at("tdf").get_to(thresholds.tdf);
  if (j.contains("min_len_ratio")) j.at("min_len_ratio").get_to(thresholds.min_len_ratio);
  if (j.contains("max_len_ratio")) {
    const auto& node = j.at("max_len_ratio");
    thresholds.max_len_ratio = node.is_null() ? std::numeric_limits<double>::infinity() : node.get<double>();
  }
  if (j.contains("tdf_measure")) {
    const auto measure = j.at("tdf_measure").get<std::string>();
    if (measure == "f1") thresholds.tdf_measure = DiversityMeasure::kF1;
    else if (measure == "recall") thresholds.tdf_measure = DiversityMeasure::kRecall;
    else throw Error(ErrorKind::kValidation, "unknown tdf_measure '" + measure + "'");
  }
}

void to_json(json& j, const FilterReport& report) {
  j = json{{"source_index", report.source_index},
           {"variant_index", report.variant_index},
           {"scf_forward", report.scf_forward},
           {"scf_backward", report.scf_backward},
           {"rouge_l", report.rouge_l},
           {"len_ratio", report.len_ratio},
           {"passed", {{"scf", report.scf}, {"tdf", report.tdf}, {"lsf", report.lsf}}},
           {"kept", report.kept}};
  if (report.error) j["error"] = *report.error;
}

void from_json(const json& j, FilterReport& report) {
  j.at("source_index").get_to(report.source_index);
  j.at("variant_index").get_to(report.variant_index);
  j.at("scf_forward").get_to(report.scf_forward);
  j.at("scf_backward").get_to(report.scf_backward);
  j.at("rouge_l").get_to(report.rouge_l);
  j.at("len_ratio").get_to(report.len_ratio);
  const auto& passed = j.at("passed");
  passed.at("scf").get_to(report.scf);
  passed.at("tdf").get_to(report.tdf);
  passed.at("lsf").get_to(report.lsf);
  j.at("kept").get_to(report.kept);
  if (j.contains("error")) report.error = j.at("error").get<std::string>();
  else report.error.reset();
}

std::string canonical_dump(const json& j) {
  return wrap_json_errors("cannot encode record", [&] { return j.dump(); });
}

json parse_json(std::string_view text) {
  return wrap_json_errors("malformed JSON", [&] { return json::parse(text); });
}

std::string encode_profile(const UserProfile& profile) { return canonical_dump(json(profile)) + "\n"; }

UserProfile decode_profile(std::string_view text) {
  return wrap_json_errors("malformed profile", [&] { return parse_json(text).get<UserProfile>(); });
}

std::string encode_record(const DatasetRecord& record) {
  json j{{"user_id", record.user_id},
         {"task", to_string(record.task)},
         {"input", record.sample.input},
         {"output", record.sample.output},
         {"provenance", to_string(record.sample.provenance)}};
  if (record.sample.source_index) j["source_index"] = *record.sample.source_index;
  if (record.sample.variant_index) j["variant_index"] = *record.sample.variant_index;
  return canonical_dump(j) + "\n";
}

std::vector<DatasetRecord> decode_records(std::string_view bytes) {
  std::vector<DatasetRecord> records;
  std::size_t line_no = 0;
  for (const auto line : split_lines(bytes)) {
    ++line_no;
    records.push_back(wrap_json_errors(("dataset line " + std::to_string(line_no)).c_str(), [&] {
      const auto j = parse_json(line);
      DatasetRecord record;
      j.at("user_id").get_to(record.user_id);
      record.task = parse_task_id(j.at("task").get<std::string>());
      j.at("input").get_to(record.sample.input);
      j.at("output").get_to(record.sample.output);
      const auto provenance = j.at("provenance").get<std::string>();
      if (provenance == "real") record.sample.provenance = Provenance::kReal;
      else if (provenance == "synthetic") record.sample.provenance = Provenance::kSynthetic;
      else throw Error(ErrorKind::kValidation, "unknown provenance '" + provenance + "'");
      if (j.contains("source_index")) record.sample.source_index = j.at("source_index").get<std::size_t>();
      if (j.contains("variant_index")) record.sample.variant_index = j.at("variant_index").get<std::size_t>();
      return record;
    }));
  }
  return records;
}

std::string encode_dataset(const LabeledDataset& dataset) {
  std::string out;
  for (const auto& sample : dataset.samples) out += encode_record({dataset.user_id, dataset.task, sample});
  return out;
}

LabeledDataset decode_dataset(std::string_view bytes, std::string_view user_id, TaskId task) {
  LabeledDataset dataset{std::string(user_id), task, {}};
  for (auto& record : decode_records(bytes)) {
    if (record.user_id != user_id || record.task != task) {
      throw Error(ErrorKind::kValidation, "dataset record belongs to " + record.user_id + "/" +
                                              std::string(to_string(record.task)) + ", expected " +
                                              std::string(user_id) + "/" + std::string(to_string(task)));
    }
    dataset.samples.push_back(std::move(record.sample));
  }
  return dataset;
}

LabeledDataset decode_dataset(std::string_view bytes) {
  const auto records = decode_records(bytes);
  if (records.empty()) throw Error(ErrorKind::kValidation, "dataset is empty; user and task unknown");
  return decode_dataset(bytes, records.front().user_id, records.front().task);
}

std::string encode_filtered(const FilteredDataset& dataset) { return encode_dataset(dataset.to_labeled()); }

std::string encode_reports(std::span<const FilterReport> reports) {
  std::string out;
  for (const auto& report : reports) out += canonical_dump(json(report)) + "\n";
  return out;
}

std::vector<FilterReport> decode_reports(std::string_view bytes) {
  std::vector<FilterReport> reports;
  for (const auto line : split_lines(bytes)) {
    reports.push_back(wrap_json_errors("malformed filter report", [&] { return parse_json(line).get<FilterReport>(); }));
  }
  return reports;
}

}  // namespace cdaug
