#include "cdaug/entailment.hpp"

#include <cmath>
#include <unordered_map>

#include <json.hpp>

#include "cdaug/error.hpp"
#include "cdaug/http_util.hpp"
#include "cdaug/text_metrics.hpp"

namespace cdaug {

double lexical_entail_prob(std::string_view premise, std::string_view hypothesis) {
  const auto hypothesis_tokens = tokenize(hypothesis);
  if (hypothesis_tokens.empty()) return 1.0;
  const auto premise_tokens = tokenize(premise);
  if (premise_tokens.empty()) return 0.0;

  std::unordered_map<std::string_view, std::size_t> available;
  for (const auto& token : premise_tokens) ++available[token];
  std::size_t covered = 0;
  for (const auto& token : hypothesis_tokens) {
    auto it = available.find(token);
    if (it != available.end() && it->second > 0) {
      --it->second;
      ++covered;
    }
  }
  return static_cast<double>(covered) / static_cast<double>(hypothesis_tokens.size());
}

RemoteNliScorer::RemoteNliScorer(RemoteNliSettings settings) : settings_(std::move(settings)) {
  parse_endpoint(settings_.url);
}

double RemoteNliScorer::entail_prob(std::string_view premise, std::string_view hypothesis) {
  const nlohmann::json body = {{"premise", premise}, {"hypothesis", hypothesis}};
  const auto response = post_json(settings_.url, body.dump(), settings_.timeout);
  double entail = 0.0, neutral = 0.0, contradict = 0.0;
  try {
    const auto doc = nlohmann::json::parse(response);
    entail = doc.at("entail").get<double>();
    neutral = doc.at("neutral").get<double>();
    contradict = doc.at("contradict").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kTransport, std::string("malformed NLI response: ") + e.what());
  }
  const bool in_range = entail >= 0.0 && entail <= 1.0 && neutral >= 0.0 && contradict >= 0.0;
  if (!in_range || std::fabs(entail + neutral + contradict - 1.0) > 1e-3) {
    throw Error(ErrorKind::kTransport, "NLI response probabilities do not form a distribution");
  }
  return entail;
}

}  // namespace cdaug
