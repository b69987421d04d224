#include "cdaug/selection.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <string>

#include "cdaug/error.hpp"
#include "cdaug/parallel.hpp"
#include "cdaug/text_metrics.hpp"

namespace cdaug {

void FilterThresholds::validate() const {
  const bool any_nan = std::isnan(scf) || std::isnan(tdf) || std::isnan(min_len_ratio) || std::isnan(max_len_ratio);
  if (any_nan) throw Error(ErrorKind::kValidation, "filter thresholds must not be NaN");
  if (!std::isfinite(scf) || !std::isfinite(tdf) || !std::isfinite(min_len_ratio)) {
    throw Error(ErrorKind::kValidation, "scf, tdf and min_len_ratio must be finite");
  }
  if (min_len_ratio < 0.0) throw Error(ErrorKind::kValidation, "min_len_ratio must be non-negative");
  if (min_len_ratio > max_len_ratio) {
    throw Error(ErrorKind::kValidation, "min_len_ratio must not exceed max_len_ratio");
  }
}

ScfOutcome scf_pass(std::string_view original, std::string_view synthetic, EntailmentScorer& scorer,
                    double threshold) {
  ScfOutcome outcome;
  outcome.forward = scorer.entail_prob(original, synthetic);
  outcome.backward = scorer.entail_prob(synthetic, original);
  outcome.pass = outcome.forward >= threshold && outcome.backward >= threshold;
  return outcome;
}

TdfOutcome tdf_pass(std::string_view original, std::string_view synthetic, double threshold,
                    DiversityMeasure measure) {
  const auto score = rouge_l(tokenize(original), tokenize(synthetic));
  TdfOutcome outcome;
  outcome.rouge_l = measure == DiversityMeasure::kF1 ? score.f1 : score.recall;
  outcome.pass = outcome.rouge_l <= threshold;
  return outcome;
}

LsfOutcome lsf_pass(std::string_view original, std::string_view synthetic, double min_ratio, double max_ratio) {
  const auto original_len = tokenize(original).size();
  if (original_len == 0) {
    throw Error(ErrorKind::kPrecondition, "length filter needs an original with at least one token");
  }
  LsfOutcome outcome;
  outcome.ratio = static_cast<double>(tokenize(synthetic).size()) / static_cast<double>(original_len);
  outcome.pass = min_ratio <= outcome.ratio && outcome.ratio <= max_ratio;
  return outcome;
}

SelectionResult select(const UserProfile& profile, std::span<const SyntheticSample> synthetic,
                       const FilterThresholds& thresholds, EntailmentScorer& scorer,
                       std::size_t parallelism) {
  thresholds.validate();
  for (std::size_t i = 0; i < synthetic.size(); ++i) {
    if (synthetic[i].source_index >= profile.history.size()) {
      throw Error(ErrorKind::kValidation,
                  "synthetic sample " + std::to_string(i) + " (variant " +
                      std::to_string(synthetic[i].variant_index) + ") has source_index " +
                      std::to_string(synthetic[i].source_index) + " outside a history of " +
                      std::to_string(profile.history.size()));
    }
  }

  SelectionResult result;
  result.reports.resize(synthetic.size());
  parallel_for(synthetic.size(), parallelism, [&](std::size_t i) {
    const auto& sample = synthetic[i];
    const auto& source = profile.history[sample.source_index];
    FilterReport& report = result.reports[i];
    report.source_index = sample.source_index;
    report.variant_index = sample.variant_index;

    const auto tdf = tdf_pass(source.input, sample.input, thresholds.tdf, thresholds.tdf_measure);
    const auto lsf = lsf_pass(source.input, sample.input, thresholds.min_len_ratio, thresholds.max_len_ratio);
    report.rouge_l = tdf.rouge_l;
    report.tdf = tdf.pass;
    report.len_ratio = lsf.ratio;
    report.lsf = lsf.pass;
    try {
      const auto scf = scf_pass(source.input, sample.input, scorer, thresholds.scf);
      report.scf_forward = scf.forward;
      report.scf_backward = scf.backward;
      report.scf = scf.pass;
    } catch (const std::exception& e) {
      // Quarantine: a scorer outage must not decide dataset membership.
      report.error = e.what();
      report.scf = false;
    }
    report.kept = !report.error && report.scf && report.tdf && report.lsf;
  });

  result.filtered.user_id = profile.user_id;
  result.filtered.task = profile.task;
  const bool classification = kind_of(profile.task) == TaskKind::kClassification;
  for (std::size_t i = 0; i < synthetic.size(); ++i) {
    const auto& report = result.reports[i];
    if (report.error) ++result.quarantined;
    if (!report.kept) continue;
    SyntheticSample kept = synthetic[i];
    if (classification) kept.output = profile.history[kept.source_index].output;
    kept.scores = report;
    result.filtered.samples.push_back(std::move(kept));
  }
  std::stable_sort(result.filtered.samples.begin(), result.filtered.samples.end(),
                   [](const SyntheticSample& a, const SyntheticSample& b) {
                     return std::tie(a.source_index, a.variant_index) < std::tie(b.source_index, b.variant_index);
                   });
  return result;
}

}  // namespace cdaug
