#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdaug/core.hpp"
#include "cdaug/prompt.hpp"

namespace cdaug {

/// Real history followed by kept synthetic samples, each tagged with its
/// provenance. Real records carry their history index as source_index.
struct MergedTrainSet {
  std::string user_id;
  TaskId task = TaskId::kMovieTag;
  std::vector<LabeledSample> records;

  LabeledDataset as_dataset() const { return {user_id, task, records}; }
  /// Error(kValidation) on duplicate (provenance, source_index, variant_index).
  static MergedTrainSet from_dataset(LabeledDataset dataset);
};

/// Union of the real history and the filtered synthetic samples. Real records
/// come first in history order, then synthetic ones in (source_index,
/// variant_index) order. Error(kValidation) when user or task differ.
MergedTrainSet merge_datasets(const UserProfile& profile, const FilteredDataset& filtered);

struct EmitOptions {
  // Fine-tuning records normally leave the history placeholder empty.
  bool with_history = false;
  // Most recent real records (excluding the record itself) rendered as history.
  std::size_t history_items = 1;
};

/// One {system, user, assistant} line per record, rendered with the task's
/// query template. Error(kNotFound) when the task has no template.
std::string emit_training_file(const MergedTrainSet& train, const PromptCatalog& catalog,
                               const TaskManifest& manifest, const EmitOptions& options = {});

struct LoraConfig {
  std::string base_model = "Qwen/Qwen2.5-0.5B-Instruct";
  int rank = 16;
  double alpha = 8.0;
  int epochs = 3;
  double learning_rate = 2e-4;
  std::uint64_t seed = 42;
  bool quantize_4bit = false;

  void validate() const;
};

struct AdapterArtifact {
  std::filesystem::path adapter_dir;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::size_t steps = 0;
};

/// Argument vector for `<runner> train ...` per the runner's flag contract.
std::vector<std::string> finetune_command(const std::filesystem::path& runner,
                                          const std::filesystem::path& training_file,
                                          const std::filesystem::path& out_dir, const LoraConfig& config);

/// Runs the fine-tune runner as a subprocess and parses its final summary
/// line {initial_loss, final_loss, steps}. Error(kRunner) for a missing
/// runner (before any side effect), a non-zero exit (with the captured
/// stderr), or a malformed summary.
AdapterArtifact run_finetune(const std::filesystem::path& training_file, const LoraConfig& config,
                             const std::filesystem::path& runner, const std::filesystem::path& out_dir);

struct MetricsReport {
  TaskId task = TaskId::kMovieTag;
  std::vector<std::pair<std::string, double>> metrics;  // fixed per-task order
  std::size_t sample_count = 0;
  std::size_t unparsable_predictions = 0;  // rating task only

  std::optional<double> get(std::string_view name) const;
};

/// Metric names reported for a task.
std::vector<std::string> metric_names(TaskId task);

/// First all-digit canonical token, when it is a rating in 1..5.
std::optional<int> parse_rating(std::string_view text);

/// Positional comparison of predictions against references.
MetricsReport evaluate(TaskId task, std::span<const std::string> predictions,
                       std::span<const std::string> references);

/// Reads one prediction / reference per line.
MetricsReport evaluate_files(TaskId task, const std::filesystem::path& predictions,
                             const std::filesystem::path& references);

std::vector<std::string> read_lines(const std::filesystem::path& path);

std::string format_metrics_table(const MetricsReport& report);
/// Line-delimited {task, metric, value}.
std::string encode_metrics_records(const MetricsReport& report);

std::string format_stats_table(std::span<const std::pair<TaskId, DatasetStats>> rows);

}  // namespace cdaug
