#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cdaug {

/// Output of the canonical tokenizer. Tokens are non-empty and carry no
/// whitespace.
using TokenSeq = std::vector<std::string>;

/// Canonical tokenizer used by every metric and filter: ASCII lowercase,
/// split on each maximal run of characters that are not ASCII alphanumerics.
/// Bytes >= 0x80 are kept inside tokens so UTF-8 words survive intact.
TokenSeq tokenize(std::string_view text);

/// Longest common subsequence length. O(|a|·|b|) time, O(min(|a|,|b|)) space.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Plain LCS ROUGE-L with beta = 1. Either operand empty gives all zeros.
RougeScore rouge_l(std::span<const std::string> reference, std::span<const std::string> candidate);

/// Clipped unigram overlap.
RougeScore rouge_1(std::span<const std::string> reference, std::span<const std::string> candidate);

double accuracy(std::span<const std::string> predictions, std::span<const std::string> references);

struct F1Averaging {
  enum class Mode { kBinary, kMacro };
  Mode mode = Mode::kMacro;
  std::string positive_label;  // binary only

  static F1Averaging binary(std::string positive) { return {Mode::kBinary, std::move(positive)}; }
  static F1Averaging macro() { return {Mode::kMacro, {}}; }
};

/// Binary: 2TP/(2TP+FP+FN). Macro: unweighted mean of per-class binary F1
/// over the union of labels seen in either list; a class with 2TP+FP+FN = 0
/// scores 0.
double f1_score(std::span<const std::string> predictions, std::span<const std::string> references,
                const F1Averaging& averaging);

double mae(std::span<const double> predictions, std::span<const double> references);
double rmse(std::span<const double> predictions, std::span<const double> references);

}  // namespace cdaug
