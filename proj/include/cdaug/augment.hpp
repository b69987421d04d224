#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cdaug/backend.hpp"
#include "cdaug/core.hpp"
#include "cdaug/prompt.hpp"

namespace cdaug {

struct GenerationConfig {
  std::size_t k = 5;
  double temperature = 0.7;
  int max_output_tokens = 256;
  std::optional<std::uint64_t> seed;

  /// Throws Error(kValidation) on k = 0, temperature <= 0 or max tokens <= 0.
  void validate() const;

  friend bool operator==(const GenerationConfig&, const GenerationConfig&) = default;
};

/// Result of one backend-produced variant: text on success, cause otherwise.
struct VariantOutcome {
  std::optional<std::string> text;
  std::string failure;

  bool ok() const { return text.has_value(); }
};

struct VariantFailure {
  std::size_t source_index = 0;
  std::size_t variant_index = 0;
  std::string cause;
};

struct AugmentationReport {
  std::size_t requested = 0;
  std::size_t generated = 0;
  std::size_t failed_variants = 0;
  std::vector<VariantFailure> failures;
};

struct AugmentationResult {
  std::vector<SyntheticSample> samples;  // (source, variant) order
  AugmentationReport report;
};

/// Drives a chat backend to synthesize k personalized variants per history
/// item. Classification variants keep the source label; generation variants
/// get a backend-produced output for the synthetic input.
///
/// Every backend call is retried once on an empty reply or transport error,
/// then recorded as a failed variant.
class AugmentationEngine {
 public:
  AugmentationEngine(ChatBackend& backend, const PromptCatalog& catalog, const TaskManifest& manifest,
                     std::size_t parallelism = 1);

  /// Exactly k outcomes, one backend call each.
  std::vector<VariantOutcome> generate_inputs(const HistoryPair& pair, TaskId task,
                                              const GenerationConfig& config) const;

  /// Generation tasks only; Error(kPrecondition) otherwise.
  VariantOutcome generate_output(std::string_view synthetic_input, TaskId task,
                                 const GenerationConfig& config, std::size_t sample_index = 1) const;

  /// Error(kPrecondition) for an empty history; Error(kAugmentationFailed)
  /// when not a single variant succeeded.
  AugmentationResult augment_user(const UserProfile& profile, const GenerationConfig& config) const;

 private:
  VariantOutcome generate_input(const HistoryPair& pair, TaskId task, const GenerationConfig& config,
                                std::size_t sample_index) const;
  VariantOutcome call_with_retry(const ChatRequest& request) const;

  ChatBackend& backend_;
  const PromptCatalog& catalog_;
  const TaskManifest& manifest_;
  std::size_t parallelism_;
};

}  // namespace cdaug
