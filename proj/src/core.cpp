#include "cdaug/core.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cdaug/error.hpp"
#include "cdaug/prompt.hpp"
#include "cdaug/text_metrics.hpp"

namespace cdaug {

namespace {

constexpr std::array kTasks = {TaskId::kCitationId,   TaskId::kMovieTag,       TaskId::kProductRating,
                               TaskId::kNewsHeadline, TaskId::kScholarlyTitle, TaskId::kTweetParaphrase};

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

TaskKind kind_of(TaskId task) {
  switch (task) {
    case TaskId::kCitationId:
    case TaskId::kMovieTag:
    case TaskId::kProductRating:
      return TaskKind::kClassification;
    case TaskId::kNewsHeadline:
    case TaskId::kScholarlyTitle:
    case TaskId::kTweetParaphrase:
      return TaskKind::kGeneration;
  }
  return TaskKind::kGeneration;
}

std::string_view to_string(TaskId task) {
  switch (task) {
    case TaskId::kCitationId: return "lamp1";
    case TaskId::kMovieTag: return "lamp2";
    case TaskId::kProductRating: return "lamp3";
    case TaskId::kNewsHeadline: return "lamp4";
    case TaskId::kScholarlyTitle: return "lamp5";
    case TaskId::kTweetParaphrase: return "lamp7";
  }
  return "unknown";
}

std::string_view descriptive_name(TaskId task) {
  switch (task) {
    case TaskId::kCitationId: return "citation-id";
    case TaskId::kMovieTag: return "movie-tag";
    case TaskId::kProductRating: return "product-rating";
    case TaskId::kNewsHeadline: return "news-headline";
    case TaskId::kScholarlyTitle: return "scholarly-title";
    case TaskId::kTweetParaphrase: return "tweet-paraphrase";
  }
  return "unknown";
}

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::kClassification ? "classification" : "generation";
}

std::string_view to_string(Provenance provenance) {
  return provenance == Provenance::kReal ? "real" : "synthetic";
}

TaskId parse_task_id(std::string_view text) {
  const std::string needle = lowercase(text);
  for (const TaskId task : kTasks) {
    const std::string wire(to_string(task));
    const std::string dashed = "lamp-" + wire.substr(4);
    if (needle == wire || needle == dashed || needle == descriptive_name(task)) return task;
  }
  throw Error(ErrorKind::kValidation, "unknown task '" + std::string(text) + "'");
}

std::span<const TaskId> all_tasks() { return kTasks; }

LabeledDataset FilteredDataset::to_labeled() const {
  LabeledDataset dataset{user_id, task, {}};
  dataset.samples.reserve(samples.size());
  for (const auto& sample : samples) {
    dataset.samples.push_back(
        {sample.input, sample.output, Provenance::kSynthetic, sample.source_index, sample.variant_index});
  }
  return dataset;
}

FilteredDataset FilteredDataset::from_labeled(const LabeledDataset& dataset) {
  FilteredDataset filtered{dataset.user_id, dataset.task, {}};
  for (const auto& sample : dataset.samples) {
    if (sample.provenance != Provenance::kSynthetic || !sample.source_index || !sample.variant_index) {
      throw Error(ErrorKind::kValidation, "filtered dataset may only hold synthetic samples with provenance");
    }
    filtered.samples.push_back({*sample.source_index, *sample.variant_index, sample.input, sample.output, {}});
  }
  return filtered;
}

TaskManifest TaskManifest::parse(std::string_view json_text) {
  TaskManifest manifest;
  try {
    const auto doc = nlohmann::json::parse(json_text);
    for (const auto& node : doc.at("tasks")) {
      const TaskId task = parse_task_id(node.at("task").get<std::string>());
      Entry entry;
      entry.labels = node.at("labels").get<std::vector<std::string>>();
      entry.input_layout = node.at("input_layout").get<std::string>();
      if (placeholders_in(entry.input_layout).empty()) {
        throw Error(ErrorKind::kValidation, "input layout for " + std::string(to_string(task)) +
                                                " names no placeholder");
      }
      if (kind_of(task) == TaskKind::kClassification && entry.labels.empty()) {
        throw Error(ErrorKind::kValidation,
                    "classification task " + std::string(to_string(task)) + " has no labels");
      }
      manifest.entries_.insert_or_assign(task, std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kValidation, std::string("malformed task manifest: ") + e.what());
  }
  for (const TaskId task : kTasks) {
    if (!manifest.entries_.contains(task)) {
      throw Error(ErrorKind::kValidation, "task manifest is missing " + std::string(to_string(task)));
    }
  }
  return manifest;
}

TaskManifest TaskManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read task manifest " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const TaskManifest::Entry& TaskManifest::entry(TaskId task) const {
  auto it = entries_.find(task);
  if (it == entries_.end()) {
    throw Error(ErrorKind::kNotFound, "task manifest has no entry for " + std::string(to_string(task)));
  }
  return it->second;
}

const std::vector<std::string>& TaskManifest::labels(TaskId task) const { return entry(task).labels; }

bool TaskManifest::is_label(TaskId task, std::string_view output) const {
  const auto& labels = entry(task).labels;
  return std::find(labels.begin(), labels.end(), output) != labels.end();
}

const std::string& TaskManifest::input_layout(TaskId task) const { return entry(task).input_layout; }

ValidationResult validate_profile(const UserProfile& profile, const TaskManifest& manifest) {
  ValidationResult result;
  auto flag = [&](std::optional<std::size_t> index, const char* rule) {
    result.violations.push_back({index, rule});
  };

  if (profile.user_id.empty()) flag(std::nullopt, "non-empty-user-id");
  if (profile.history.empty()) flag(std::nullopt, "non-empty-history");

  const bool classification = kind_of(profile.task) == TaskKind::kClassification;
  const auto& layout = manifest.input_layout(profile.task);
  for (std::size_t i = 0; i < profile.history.size(); ++i) {
    const auto& pair = profile.history[i];
    if (pair.input.empty()) {
      flag(i, "non-empty-input");
    } else {
      if (tokenize(pair.input).empty()) flag(i, "input-has-tokens");
      if (!matches_layout(layout, pair.input)) flag(i, "input-layout");
    }
    if (pair.output.empty()) flag(i, "non-empty-output");
    else if (classification && !manifest.is_label(profile.task, pair.output)) flag(i, "label-in-set");
    if (i > 0 && pair.timestamp < profile.history[i - 1].timestamp) flag(i, "sorted-timestamps");
  }
  return result;
}

std::string describe(const ValidationResult& result) {
  if (result.ok()) return "ok";
  std::string text;
  for (const auto& v : result.violations) {
    if (!text.empty()) text += "; ";
    text += v.rule;
    if (v.index) text += " at index " + std::to_string(*v.index);
  }
  return text;
}

DatasetStats dataset_stats(std::span<const LabeledDataset> datasets) {
  if (datasets.empty()) throw Error(ErrorKind::kValidation, "dataset_stats needs at least one dataset");
  DatasetStats stats;
  std::size_t input_tokens = 0;
  std::size_t output_tokens = 0;
  for (const auto& dataset : datasets) {
    for (const auto& sample : dataset.samples) {
      ++stats.num_queries;
      input_tokens += tokenize(sample.input).size();
      output_tokens += tokenize(sample.output).size();
    }
  }
  stats.num_history = static_cast<double>(stats.num_queries) / static_cast<double>(datasets.size());
  if (stats.num_queries > 0) {
    const auto n = static_cast<double>(stats.num_queries);
    stats.mean_input_tokens = static_cast<double>(input_tokens) / n;
    stats.mean_output_tokens = static_cast<double>(output_tokens) / n;
  }
  return stats;
}

}  // namespace cdaug
