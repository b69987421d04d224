#include "cdaug/backend.hpp"

#include <algorithm>

#include <json.hpp>

#include "cdaug/error.hpp"
#include "cdaug/http_util.hpp"
#include "cdaug/text_metrics.hpp"

namespace cdaug {

namespace {

std::string join(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& token : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

}  // namespace

std::string MockChatBackend::complete(const ChatRequest& request) {
  auto tokens = tokenize(request.subject);
  if (tokens.empty()) return {};
  if (request.purpose == RequestPurpose::kAnswer) {
    tokens.resize(std::min<std::size_t>(8, tokens.size()));
    return join(tokens);
  }
  const auto shift = request.sample_index % tokens.size();
  std::rotate(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(shift), tokens.end());
  return join(tokens);
}

RemoteChatBackend::RemoteChatBackend(RemoteBackendSettings settings) : settings_(std::move(settings)) {
  parse_endpoint(settings_.url);
}

std::string RemoteChatBackend::complete(const ChatRequest& request) {
  nlohmann::json body = {
      {"model", settings_.model},
      {"messages",
       {{{"role", "system"}, {"content", request.system}}, {{"role", "user"}, {"content", request.user}}}},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
  };
  // Distinct seeds per variant, otherwise k identical prompts would collapse
  // to one sample on servers that honor seeds.
  if (request.seed) body["seed"] = *request.seed + request.sample_index - 1;

  const auto response = post_json(settings_.url, body.dump(), settings_.timeout, settings_.api_token);
  try {
    const auto doc = nlohmann::json::parse(response);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kTransport, std::string("malformed chat completion response: ") + e.what());
  }
}

}  // namespace cdaug
