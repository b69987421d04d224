#include "cdaug/augment.hpp"

#include <cmath>

#include "cdaug/error.hpp"
#include "cdaug/parallel.hpp"

namespace cdaug {

namespace {

std::string trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto begin = text.find_first_not_of(kSpace);
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(kSpace);
  return std::string(text.substr(begin, end - begin + 1));
}

}  // namespace

void GenerationConfig::validate() const {
  if (k == 0) throw Error(ErrorKind::kValidation, "k must be at least 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorKind::kValidation, "temperature must be a positive finite number");
  }
  if (max_output_tokens <= 0) throw Error(ErrorKind::kValidation, "max_output_tokens must be positive");
}

AugmentationEngine::AugmentationEngine(ChatBackend& backend, const PromptCatalog& catalog,
                                       const TaskManifest& manifest, std::size_t parallelism)
    : backend_(backend), catalog_(catalog), manifest_(manifest), parallelism_(std::max<std::size_t>(parallelism, 1)) {}

VariantOutcome AugmentationEngine::call_with_retry(const ChatRequest& request) const {
  std::string cause;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      auto text = trim(backend_.complete(request));
      if (!text.empty()) return {std::move(text), {}};
      cause = "empty backend output";
    } catch (const Error& e) {
      cause = e.what();
    } catch (const std::exception& e) {
      cause = std::string("backend error: ") + e.what();
    }
  }
  return {std::nullopt, cause};
}

VariantOutcome AugmentationEngine::generate_input(const HistoryPair& pair, TaskId task,
                                                  const GenerationConfig& config,
                                                  std::size_t sample_index) const {
  const auto& layout = manifest_.input_layout(task);
  auto fields = decompose_input(layout, pair.input);
  // Only the leading field is rewritten; e.g. citation options stay intact so
  // the label keeps its meaning.
  const std::string primary = placeholders_in(layout).front();

  ChatRequest request;
  const auto prompt = render_prompt(catalog_.at(task).rewrite, fields);
  request.system = prompt.system;
  request.user = prompt.user;
  request.temperature = config.temperature;
  request.max_tokens = config.max_output_tokens;
  request.seed = config.seed;
  request.sample_index = sample_index;
  request.purpose = RequestPurpose::kRewrite;
  request.subject = fields.at(primary);

  auto outcome = call_with_retry(request);
  if (!outcome.ok()) return outcome;
  fields[primary] = std::move(*outcome.text);
  return {substitute(layout, fields), {}};
}

std::vector<VariantOutcome> AugmentationEngine::generate_inputs(const HistoryPair& pair, TaskId task,
                                                                const GenerationConfig& config) const {
  config.validate();
  std::vector<VariantOutcome> outcomes(config.k);
  parallel_for(config.k, parallelism_,
               [&](std::size_t j) { outcomes[j] = generate_input(pair, task, config, j + 1); });
  return outcomes;
}

VariantOutcome AugmentationEngine::generate_output(std::string_view synthetic_input, TaskId task,
                                                   const GenerationConfig& config,
                                                   std::size_t sample_index) const {
  if (kind_of(task) != TaskKind::kGeneration) {
    throw Error(ErrorKind::kPrecondition,
                "generate_output called for classification task " + std::string(to_string(task)));
  }
  auto bindings = decompose_input(manifest_.input_layout(task), synthetic_input);
  bindings.emplace(std::string(kHistoryPlaceholder), std::string());
  const auto prompt = render_prompt(catalog_.at(task).query, bindings);

  ChatRequest request;
  request.system = prompt.system;
  request.user = prompt.user;
  request.temperature = config.temperature;
  request.max_tokens = config.max_output_tokens;
  request.seed = config.seed;
  request.sample_index = sample_index;
  request.purpose = RequestPurpose::kAnswer;
  request.subject = std::string(synthetic_input);
  return call_with_retry(request);
}

AugmentationResult AugmentationEngine::augment_user(const UserProfile& profile,
                                                    const GenerationConfig& config) const {
  config.validate();
  if (profile.history.empty()) {
    throw Error(ErrorKind::kPrecondition, "augmentation needs a non-empty history");
  }
  const bool classification = kind_of(profile.task) == TaskKind::kClassification;
  const std::size_t total = profile.history.size() * config.k;

  struct Slot {
    SyntheticSample sample;
    std::string failure;
    bool ok = false;
  };
  std::vector<Slot> slots(total);

  parallel_for(total, parallelism_, [&](std::size_t flat) {
    const std::size_t source = flat / config.k;
    const std::size_t variant = flat % config.k + 1;
    const auto& pair = profile.history[source];
    Slot& slot = slots[flat];
    slot.sample.source_index = source;
    slot.sample.variant_index = variant;

    auto input = generate_input(pair, profile.task, config, variant);
    if (!input.ok()) {
      slot.failure = std::move(input.failure);
      return;
    }
    slot.sample.input = std::move(*input.text);
    if (classification) {
      slot.sample.output = pair.output;
    } else {
      auto output = generate_output(slot.sample.input, profile.task, config, variant);
      if (!output.ok()) {
        slot.failure = std::move(output.failure);
        return;
      }
      slot.sample.output = std::move(*output.text);
    }
    slot.ok = true;
  });

  AugmentationResult result;
  result.report.requested = total;
  for (auto& slot : slots) {
    if (slot.ok) {
      result.samples.push_back(std::move(slot.sample));
    } else {
      result.report.failures.push_back(
          {slot.sample.source_index, slot.sample.variant_index, std::move(slot.failure)});
    }
  }
  result.report.generated = result.samples.size();
  result.report.failed_variants = result.report.failures.size();
  if (result.samples.empty()) {
    const std::string cause =
        result.report.failures.empty() ? std::string("no variants") : result.report.failures.front().cause;
    throw Error(ErrorKind::kAugmentationFailed, "augmentation-failed: every variant failed (" + cause + ")");
  }
  return result;
}

}  // namespace cdaug
