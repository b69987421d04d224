#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cdaug {

enum class TaskKind { kClassification, kGeneration };

/// The six LaMP tasks handled by the pipeline (LaMP-6 is not public).
enum class TaskId {
  kCitationId,       // lamp1
  kMovieTag,         // lamp2
  kProductRating,    // lamp3
  kNewsHeadline,     // lamp4
  kScholarlyTitle,   // lamp5
  kTweetParaphrase,  // lamp7
};

TaskKind kind_of(TaskId task);

/// Wire name, e.g. "lamp2".
std::string_view to_string(TaskId task);
/// Human name, e.g. "movie-tag".
std::string_view descriptive_name(TaskId task);
std::string_view to_string(TaskKind kind);

/// Accepts the wire name, the descriptive name, or "LaMP-N" (case-insensitive).
/// Throws Error(kValidation) for anything else.
TaskId parse_task_id(std::string_view text);

std::span<const TaskId> all_tasks();

struct HistoryPair {
  std::string input;
  std::string output;
  // Ordinal only: compared, never subtracted.
  std::int64_t timestamp = 0;

  friend bool operator==(const HistoryPair&, const HistoryPair&) = default;
};

struct UserProfile {
  std::string user_id;
  TaskId task = TaskId::kMovieTag;
  std::vector<HistoryPair> history;

  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

/// Per-sample outcome of the three selection filters.
struct FilterReport {
  std::size_t source_index = 0;
  std::size_t variant_index = 0;
  double scf_forward = 0.0;
  double scf_backward = 0.0;
  double rouge_l = 0.0;
  double len_ratio = 0.0;
  bool scf = false;
  bool tdf = false;
  bool lsf = false;
  bool kept = false;
  // Set when the entailment scorer failed; the sample is quarantined.
  std::optional<std::string> error;

  friend bool operator==(const FilterReport&, const FilterReport&) = default;
};

struct SyntheticSample {
  std::size_t source_index = 0;
  std::size_t variant_index = 1;  // 1..k
  std::string input;
  std::string output;
  std::optional<FilterReport> scores;

  friend bool operator==(const SyntheticSample&, const SyntheticSample&) = default;
};

enum class Provenance { kReal, kSynthetic };
std::string_view to_string(Provenance provenance);

struct LabeledSample {
  std::string input;
  std::string output;
  Provenance provenance = Provenance::kReal;
  std::optional<std::size_t> source_index;
  std::optional<std::size_t> variant_index;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

struct LabeledDataset {
  std::string user_id;
  TaskId task = TaskId::kMovieTag;
  std::vector<LabeledSample> samples;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

/// Synthetic samples that survived every filter, in (source, variant) order.
struct FilteredDataset {
  std::string user_id;
  TaskId task = TaskId::kMovieTag;
  std::vector<SyntheticSample> samples;

  LabeledDataset to_labeled() const;
  static FilteredDataset from_labeled(const LabeledDataset& dataset);

  friend bool operator==(const FilteredDataset&, const FilteredDataset&) = default;
};

/// Per-task corpus summary: query count, mean history length, mean token lengths.
struct DatasetStats {
  std::size_t num_queries = 0;
  double num_history = 0.0;
  double mean_input_tokens = 0.0;
  double mean_output_tokens = 0.0;
};

struct Violation {
  std::optional<std::size_t> index;  // unset for profile-level rules
  std::string rule;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Per-task label sets and input layouts, loaded from data/tasks.json.
///
/// The input layout describes how a history input is composed from prompt
/// fields, e.g. "{PAPER TITLE} [1]: {OPTION_1} [2]: {OPTION_2}" for
/// citation identification. Single-field tasks use a bare placeholder.
class TaskManifest {
 public:
  static TaskManifest load(const std::filesystem::path& path);
  static TaskManifest parse(std::string_view json_text);

  /// Empty for generation tasks.
  const std::vector<std::string>& labels(TaskId task) const;
  bool is_label(TaskId task, std::string_view output) const;
  const std::string& input_layout(TaskId task) const;

 private:
  struct Entry {
    std::vector<std::string> labels;
    std::string input_layout;
  };
  const Entry& entry(TaskId task) const;

  std::map<TaskId, Entry> entries_;
};

/// Checks every UserProfile/HistoryPair invariant. Violations are data.
ValidationResult validate_profile(const UserProfile& profile, const TaskManifest& manifest);

/// Throws Error(kValidation) for an empty list.
DatasetStats dataset_stats(std::span<const LabeledDataset> datasets);

std::string describe(const ValidationResult& result);

}  // namespace cdaug
