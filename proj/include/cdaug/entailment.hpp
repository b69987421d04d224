#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include "cdaug/backend.hpp"

namespace cdaug {

/// Directional entailment model: probability that `premise` entails
/// `hypothesis`, in [0, 1]. Failures surface as Error(kTransport).
/// Implementations must tolerate concurrent calls.
class EntailmentScorer {
 public:
  virtual ~EntailmentScorer() = default;
  virtual BackendCapability capability() const = 0;
  virtual double entail_prob(std::string_view premise, std::string_view hypothesis) = 0;
};

/// Clipped multiset coverage of the hypothesis tokens by the premise tokens.
/// Empty hypothesis scores 1; empty premise against a non-empty hypothesis
/// scores 0.
double lexical_entail_prob(std::string_view premise, std::string_view hypothesis);

/// Deterministic fallback scorer backed by lexical_entail_prob.
class LexicalEntailmentScorer final : public EntailmentScorer {
 public:
  BackendCapability capability() const override { return {"lexical", true}; }
  double entail_prob(std::string_view premise, std::string_view hypothesis) override {
    return lexical_entail_prob(premise, hypothesis);
  }
};

struct RemoteNliSettings {
  std::string url;
  std::chrono::seconds timeout{30};
};

/// Client for an NLI service: POST {premise, hypothesis} ->
/// {entail, neutral, contradict}. The entail mass is the score; responses
/// whose three masses do not sum to 1 within 1e-3 are rejected.
class RemoteNliScorer final : public EntailmentScorer {
 public:
  explicit RemoteNliScorer(RemoteNliSettings settings);

  BackendCapability capability() const override { return {"remote-nli", false}; }
  double entail_prob(std::string_view premise, std::string_view hypothesis) override;

 private:
  RemoteNliSettings settings_;
};

}  // namespace cdaug
