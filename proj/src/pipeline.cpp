#include "cdaug/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "cdaug/codec.hpp"
#include "cdaug/error.hpp"
#include "cdaug/job_store.hpp"
#include "cdaug/text_metrics.hpp"

extern char** environ;

namespace cdaug {

using nlohmann::json;

namespace {

std::string trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto begin = text.find_first_not_of(kSpace);
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(kSpace);
  return std::string(text.substr(begin, end - begin + 1));
}

std::string format_number(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

struct ProcessResult {
  int exit_code = -1;
  bool signaled = false;
  std::string out;
  std::string err;
};

ProcessResult run_process(const std::vector<std::string>& argv) {
  int out_pipe[2], err_pipe[2];
  if (::pipe(out_pipe) != 0) throw Error(ErrorKind::kRunner, "pipe() failed");
  if (::pipe(err_pipe) != 0) {
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    throw Error(ErrorKind::kRunner, "pipe() failed");
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, err_pipe[1], STDERR_FILENO);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);
  posix_spawn_file_actions_addclose(&actions, err_pipe[0]);

  std::vector<char*> args;
  for (const auto& arg : argv) args.push_back(const_cast<char*>(arg.c_str()));
  args.push_back(nullptr);

  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  if (rc != 0) {
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);
    throw Error(ErrorKind::kRunner, "cannot launch " + argv[0] + ": " + std::strerror(rc));
  }

  ProcessResult result;
  pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  std::string* sinks[2] = {&result.out, &result.err};
  int open_count = 2;
  char buffer[4096];
  while (open_count > 0) {
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const auto n = ::read(fds[i].fd, buffer, sizeof(buffer));
      if (n > 0) {
        sinks[i]->append(buffer, static_cast<std::size_t>(n));
      } else {
        ::close(fds[i].fd);
        fds[i].fd = -1;
        --open_count;
      }
    }
  }
  for (auto& fd : fds) {
    if (fd.fd >= 0) ::close(fd.fd);
  }

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  if (WIFSIGNALED(status)) result.signaled = true;
  return result;
}

std::string format_history(std::span<const LabeledSample> records, std::size_t self, std::size_t limit) {
  std::vector<const LabeledSample*> picked;
  for (std::size_t i = records.size(); i-- > 0 && picked.size() < limit;) {
    if (i == self || records[i].provenance != Provenance::kReal) continue;
    picked.push_back(&records[i]);
  }
  std::reverse(picked.begin(), picked.end());
  std::string text;
  for (const auto* record : picked) {
    if (!text.empty()) text += "\n";
    text += "input: " + record->input + "\noutput: " + record->output;
  }
  return text;
}

}  // namespace

MergedTrainSet MergedTrainSet::from_dataset(LabeledDataset dataset) {
  std::set<std::tuple<Provenance, std::optional<std::size_t>, std::optional<std::size_t>>> seen;
  for (const auto& record : dataset.samples) {
    if (!seen.emplace(record.provenance, record.source_index, record.variant_index).second) {
      throw Error(ErrorKind::kValidation, "duplicate " + std::string(to_string(record.provenance)) +
                                              " record for source " +
                                              (record.source_index ? std::to_string(*record.source_index) : "?"));
    }
  }
  return {std::move(dataset.user_id), dataset.task, std::move(dataset.samples)};
}

MergedTrainSet merge_datasets(const UserProfile& profile, const FilteredDataset& filtered) {
  if (profile.user_id != filtered.user_id || profile.task != filtered.task) {
    throw Error(ErrorKind::kValidation, "cannot merge " + filtered.user_id + "/" +
                                            std::string(to_string(filtered.task)) + " into profile " +
                                            profile.user_id + "/" + std::string(to_string(profile.task)));
  }
  MergedTrainSet train{profile.user_id, profile.task, {}};
  train.records.reserve(profile.history.size() + filtered.samples.size());
  for (std::size_t i = 0; i < profile.history.size(); ++i) {
    const auto& pair = profile.history[i];
    train.records.push_back({pair.input, pair.output, Provenance::kReal, i, std::nullopt});
  }
  std::vector<SyntheticSample> synthetic = filtered.samples;
  std::stable_sort(synthetic.begin(), synthetic.end(), [](const auto& a, const auto& b) {
    return std::tie(a.source_index, a.variant_index) < std::tie(b.source_index, b.variant_index);
  });
  for (auto& sample : synthetic) {
    train.records.push_back({std::move(sample.input), std::move(sample.output), Provenance::kSynthetic,
                             sample.source_index, sample.variant_index});
  }
  return MergedTrainSet::from_dataset(train.as_dataset());
}

std::string emit_training_file(const MergedTrainSet& train, const PromptCatalog& catalog,
                               const TaskManifest& manifest, const EmitOptions& options) {
  if (!catalog.contains(train.task)) {
    throw Error(ErrorKind::kNotFound, "no prompt template for task " + std::string(to_string(train.task)));
  }
  const auto& query = catalog.at(train.task).query;
  const auto& layout = manifest.input_layout(train.task);
  std::string out;
  for (std::size_t i = 0; i < train.records.size(); ++i) {
    const auto& record = train.records[i];
    auto bindings = decompose_input(layout, record.input);
    bindings.insert_or_assign(std::string(kHistoryPlaceholder),
                              options.with_history ? format_history(train.records, i, options.history_items)
                                                   : std::string());
    const auto prompt = render_prompt(query, bindings);
    out += canonical_dump(json{{"system", prompt.system}, {"user", prompt.user}, {"assistant", record.output}});
    out += "\n";
  }
  return out;
}

void LoraConfig::validate() const {
  if (rank <= 0) throw Error(ErrorKind::kValidation, "LoRA rank must be positive");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::kValidation, "LoRA alpha must be positive");
  if (epochs < 0) throw Error(ErrorKind::kValidation, "epochs must be non-negative");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::kValidation, "learning rate must be positive");
  }
}

std::vector<std::string> finetune_command(const std::filesystem::path& runner,
                                          const std::filesystem::path& training_file,
                                          const std::filesystem::path& out_dir, const LoraConfig& config) {
  std::vector<std::string> argv = {runner.string(),
                                   "train",
                                   "--base",
                                   config.base_model,
                                   "--in",
                                   training_file.string(),
                                   "--out",
                                   out_dir.string(),
                                   "--rank",
                                   std::to_string(config.rank),
                                   "--alpha",
                                   format_number(config.alpha),
                                   "--epochs",
                                   std::to_string(config.epochs),
                                   "--lr",
                                   format_number(config.learning_rate),
                                   "--seed",
                                   std::to_string(config.seed)};
  if (config.quantize_4bit) argv.push_back("--quantize-4bit");
  return argv;
}

AdapterArtifact run_finetune(const std::filesystem::path& training_file, const LoraConfig& config,
                             const std::filesystem::path& runner, const std::filesystem::path& out_dir) {
  config.validate();
  if (runner.empty() || !std::filesystem::is_regular_file(runner) || ::access(runner.c_str(), X_OK) != 0) {
    throw Error(ErrorKind::kRunner, "fine-tune runner not found or not executable: " + runner.string());
  }
  if (!std::filesystem::is_regular_file(training_file)) {
    throw Error(ErrorKind::kValidation, "training file not found: " + training_file.string());
  }
  std::size_t line_no = 0;
  for (const auto& line : read_lines(training_file)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto record = json::parse(line);
      for (const char* key : {"system", "user", "assistant"}) {
        if (!record.at(key).is_string()) throw Error(ErrorKind::kValidation, std::string(key) + " is not a string");
      }
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kValidation,
                  training_file.string() + ":" + std::to_string(line_no) + ": malformed training record: " + e.what());
    }
  }

  const auto result = run_process(finetune_command(runner, training_file, out_dir, config));
  if (result.signaled || result.exit_code != 0) {
    throw Error(ErrorKind::kRunner, "fine-tune runner " +
                                        (result.signaled ? std::string("crashed")
                                                         : "exited with " + std::to_string(result.exit_code)) +
                                        ": " + trim(result.err));
  }

  std::string summary_line;
  std::istringstream lines(result.out);
  for (std::string line; std::getline(lines, line);) {
    if (!trim(line).empty()) summary_line = trim(line);
  }
  try {
    const auto summary = json::parse(summary_line);
    AdapterArtifact artifact;
    artifact.adapter_dir = out_dir;
    artifact.initial_loss = summary.at("initial_loss").get<double>();
    artifact.final_loss = summary.at("final_loss").get<double>();
    artifact.steps = summary.at("steps").get<std::size_t>();
    return artifact;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kRunner, "malformed runner summary '" + summary_line + "': " + e.what());
  }
}

std::optional<double> MetricsReport::get(std::string_view name) const {
  for (const auto& [metric, value] : metrics) {
    if (metric == name) return value;
  }
  return std::nullopt;
}

std::vector<std::string> metric_names(TaskId task) {
  switch (task) {
    case TaskId::kCitationId:
    case TaskId::kMovieTag:
      return {"accuracy", "f1"};
    case TaskId::kProductRating:
      return {"mae", "rmse"};
    default:
      return {"rouge_1", "rouge_l"};
  }
}

std::optional<int> parse_rating(std::string_view text) {
  for (const auto& token : tokenize(text)) {
    if (!std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    if (token.size() == 1 && token[0] >= '1' && token[0] <= '5') return token[0] - '0';
    return std::nullopt;
  }
  return std::nullopt;
}

MetricsReport evaluate(TaskId task, std::span<const std::string> predictions,
                       std::span<const std::string> references) {
  if (predictions.size() != references.size()) {
    throw Error(ErrorKind::kValidation, "prediction count " + std::to_string(predictions.size()) +
                                            " differs from reference count " + std::to_string(references.size()));
  }
  if (predictions.empty()) throw Error(ErrorKind::kValidation, "nothing to evaluate");

  MetricsReport report;
  report.task = task;
  report.sample_count = predictions.size();

  if (task == TaskId::kProductRating) {
    std::vector<double> predicted, expected;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const auto reference = parse_rating(references[i]);
      if (!reference) {
        throw Error(ErrorKind::kValidation, "reference " + std::to_string(i + 1) + " is not a 1-5 rating");
      }
      expected.push_back(*reference);
      if (auto rating = parse_rating(predictions[i])) {
        predicted.push_back(*rating);
      } else {
        // Scored as the farthest valid rating from the reference.
        ++report.unparsable_predictions;
        predicted.push_back(*reference - 1 >= 5 - *reference ? 1.0 : 5.0);
      }
    }
    report.metrics = {{"mae", mae(predicted, expected)}, {"rmse", rmse(predicted, expected)}};
    return report;
  }

  if (kind_of(task) == TaskKind::kClassification) {
    std::vector<std::string> predicted, expected;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      predicted.push_back(trim(predictions[i]));
      expected.push_back(trim(references[i]));
    }
    report.metrics = {{"accuracy", accuracy(predicted, expected)},
                      {"f1", f1_score(predicted, expected, F1Averaging::macro())}};
    return report;
  }

  double rouge1 = 0.0, rougel = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto reference = tokenize(references[i]);
    const auto candidate = tokenize(predictions[i]);
    rouge1 += rouge_1(reference, candidate).f1;
    rougel += rouge_l(reference, candidate).f1;
  }
  const auto n = static_cast<double>(predictions.size());
  report.metrics = {{"rouge_1", rouge1 / n}, {"rouge_l", rougel / n}};
  return report;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < bytes.size()) {
    auto end = bytes.find('\n', start);
    if (end == std::string::npos) end = bytes.size();
    std::string line = bytes.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

MetricsReport evaluate_files(TaskId task, const std::filesystem::path& predictions,
                             const std::filesystem::path& references) {
  return evaluate(task, read_lines(predictions), read_lines(references));
}

std::string format_metrics_table(const MetricsReport& report) {
  std::ostringstream out;
  out << "task " << to_string(report.task) << " (" << descriptive_name(report.task) << "), " << report.sample_count
      << " samples\n";
  for (const auto& [name, value] : report.metrics) {
    char line[96];
    std::snprintf(line, sizeof(line), "  %-10s %.4f\n", name.c_str(), value);
    out << line;
  }
  if (report.unparsable_predictions > 0) {
    out << "  (" << report.unparsable_predictions << " unparsable predictions scored as maximal error)\n";
  }
  return out.str();
}

std::string encode_metrics_records(const MetricsReport& report) {
  std::string out;
  for (const auto& [name, value] : report.metrics) {
    out += canonical_dump(json{{"task", to_string(report.task)}, {"metric", name}, {"value", value}}) + "\n";
  }
  return out;
}

std::string format_stats_table(std::span<const std::pair<TaskId, DatasetStats>> rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %8s %10s %8s %8s\n", "task", "#Q", "#History", "L_in", "L_out");
  out << line;
  for (const auto& [task, stats] : rows) {
    std::snprintf(line, sizeof(line), "%-8s %8zu %10.2f %8.2f %8.2f\n", std::string(to_string(task)).c_str(),
                  stats.num_queries, stats.num_history, stats.mean_input_tokens, stats.mean_output_tokens);
    out << line;
  }
  return out.str();
}

}  // namespace cdaug
