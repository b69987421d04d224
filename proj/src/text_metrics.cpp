#include "cdaug/text_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "cdaug/error.hpp"

namespace cdaug {

namespace {

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

char ascii_lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

void require_paired(std::size_t predictions, std::size_t references) {
  if (predictions != references) {
    throw Error(ErrorKind::kValidation, "length mismatch: " + std::to_string(predictions) +
                                            " predictions vs " + std::to_string(references) +
                                            " references");
  }
  if (predictions == 0) {
    throw Error(ErrorKind::kValidation, "metric requires at least one prediction");
  }
}

RougeScore make_score(double overlap, std::size_t reference_len, std::size_t candidate_len) {
  if (reference_len == 0 || candidate_len == 0) return {};
  RougeScore score;
  score.precision = overlap / static_cast<double>(candidate_len);
  score.recall = overlap / static_cast<double>(reference_len);
  // 2PR/(P+R) reduced to counts; keeps f1 correctly rounded when P = R.
  score.f1 = 2.0 * overlap / static_cast<double>(reference_len + candidate_len);
  return score;
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current.push_back(ascii_lower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  // Keep the DP row over the shorter sequence.
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return 0;

  std::vector<std::size_t> row(b.size() + 1, 0);
  for (const auto& token : a) {
    std::size_t diagonal = 0;  // row[j-1] from the previous iteration of a
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      row[j] = token == b[j - 1] ? diagonal + 1 : std::max(row[j], row[j - 1]);
      diagonal = above;
    }
  }
  return row.back();
}

RougeScore rouge_l(std::span<const std::string> reference, std::span<const std::string> candidate) {
  if (reference.empty() || candidate.empty()) return {};
  const auto lcs = static_cast<double>(lcs_length(reference, candidate));
  return make_score(lcs, reference.size(), candidate.size());
}

RougeScore rouge_1(std::span<const std::string> reference, std::span<const std::string> candidate) {
  if (reference.empty() || candidate.empty()) return {};
  std::unordered_map<std::string_view, std::size_t> counts;
  for (const auto& token : reference) ++counts[token];
  std::size_t overlap = 0;
  for (const auto& token : candidate) {
    auto it = counts.find(token);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return make_score(static_cast<double>(overlap), reference.size(), candidate.size());
}

double accuracy(std::span<const std::string> predictions, std::span<const std::string> references) {
  require_paired(predictions.size(), references.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == references[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double f1_score(std::span<const std::string> predictions, std::span<const std::string> references,
                const F1Averaging& averaging) {
  require_paired(predictions.size(), references.size());

  auto binary_f1 = [&](std::string_view positive) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const bool predicted = predictions[i] == positive;
      const bool actual = references[i] == positive;
      if (predicted && actual) ++tp;
      else if (predicted) ++fp;
      else if (actual) ++fn;
    }
    const std::size_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  };

  if (averaging.mode == F1Averaging::Mode::kBinary) {
    if (averaging.positive_label.empty()) {
      throw Error(ErrorKind::kValidation, "binary F1 requires a positive label");
    }
    return binary_f1(averaging.positive_label);
  }

  std::set<std::string_view> classes;
  for (const auto& p : predictions) classes.insert(p);
  for (const auto& r : references) classes.insert(r);
  double total = 0.0;
  for (const auto label : classes) total += binary_f1(label);
  return total / static_cast<double>(classes.size());
}

double mae(std::span<const double> predictions, std::span<const double> references) {
  require_paired(predictions.size(), references.size());
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    total += std::fabs(predictions[i] - references[i]);
  }
  return total / static_cast<double>(predictions.size());
}

double rmse(std::span<const double> predictions, std::span<const double> references) {
  require_paired(predictions.size(), references.size());
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - references[i];
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(predictions.size()));
}

}  // namespace cdaug
