#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "cdaug/core.hpp"
#include "cdaug/entailment.hpp"

namespace cdaug {

/// Which ROUGE-L component the token-diversity filter compares.
enum class DiversityMeasure { kF1, kRecall };

/// Selection thresholds. The defaults are repository choices; no published
/// values exist.
struct FilterThresholds {
  double scf = 0.5;
  double tdf = 0.8;
  double min_len_ratio = 0.5;
  double max_len_ratio = 2.0;  // +inf means unbounded
  DiversityMeasure tdf_measure = DiversityMeasure::kF1;

  /// Rejects NaN, negative bounds, an infinite lower bound, and min > max.
  void validate() const;

  friend bool operator==(const FilterThresholds&, const FilterThresholds&) = default;
};

struct ScfOutcome {
  bool pass = false;
  double forward = 0.0;   // x => x_syn
  double backward = 0.0;  // x_syn => x
};

struct TdfOutcome {
  bool pass = false;
  double rouge_l = 0.0;
};

struct LsfOutcome {
  bool pass = false;
  double ratio = 0.0;
};

/// Semantic consistency: both entailment directions must reach `threshold`.
/// Scorer errors propagate.
ScfOutcome scf_pass(std::string_view original, std::string_view synthetic, EntailmentScorer& scorer,
                    double threshold);

/// Token diversity: ROUGE-L(original, synthetic) <= threshold (inclusive).
TdfOutcome tdf_pass(std::string_view original, std::string_view synthetic, double threshold,
                    DiversityMeasure measure = DiversityMeasure::kF1);

/// Length ratio |tok(synthetic)| / |tok(original)| within [min, max]
/// inclusive. Error(kPrecondition) when the original has no tokens.
LsfOutcome lsf_pass(std::string_view original, std::string_view synthetic, double min_ratio, double max_ratio);

struct SelectionResult {
  FilteredDataset filtered;
  std::vector<FilterReport> reports;  // one per input sample, input order
  std::size_t quarantined = 0;        // samples dropped because the scorer failed
};

/// Synthetic data selection. A sample is kept iff it passes all three filters
/// against its own source pair. Kept classification samples carry the source
/// label; kept generation samples keep their synthetic output.
///
/// Error(kValidation) names any sample whose source_index is out of range.
SelectionResult select(const UserProfile& profile, std::span<const SyntheticSample> synthetic,
                       const FilterThresholds& thresholds, EntailmentScorer& scorer,
                       std::size_t parallelism = 1);

}  // namespace cdaug
