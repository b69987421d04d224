#include "cdaug/config.hpp"

#include <cstdlib>
#include <set>

#include <json.hpp>

#include "cdaug/codec.hpp"
#include "cdaug/error.hpp"
#include "cdaug/job_store.hpp"

#ifndef CDAUG_DEFAULT_DATA_DIR
#define CDAUG_DEFAULT_DATA_DIR "data"
#endif

namespace cdaug {

using nlohmann::json;

namespace {

std::size_t parse_count(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const auto value = std::stoul(text, &used);
    if (used == text.size() && value > 0) return value;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::kValidation, std::string(what) + " must be a positive integer, got '" + text + "'");
}

void apply_file(AppConfig& config, const json& doc) {
  static const std::set<std::string> kKeys = {"listen", "server", "workers", "backend", "scorer_url",
                                              "store_dir", "prompts_dir", "manifest", "runner"};
  if (!doc.is_object()) throw Error(ErrorKind::kValidation, "config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kKeys.contains(key)) throw Error(ErrorKind::kValidation, "unknown config key '" + key + "'");
  }
  try {
    if (doc.contains("listen")) config.listen = doc.at("listen").get<std::string>();
    if (doc.contains("server")) config.server = doc.at("server").get<std::string>();
    if (doc.contains("workers")) {
      config.workers = doc.at("workers").get<std::size_t>();
      if (config.workers == 0) throw Error(ErrorKind::kValidation, "workers must be positive");
    }
    if (doc.contains("backend")) {
      const auto& backend = doc.at("backend");
      config.backend.url = backend.value("url", config.backend.url);
      config.backend.model = backend.value("model", config.backend.model);
      config.backend.api_token = backend.value("token", config.backend.api_token);
      if (backend.contains("timeout_s")) {
        config.backend.timeout = std::chrono::seconds(backend.at("timeout_s").get<unsigned>());
      }
    }
    if (doc.contains("scorer_url")) config.scorer_url = doc.at("scorer_url").get<std::string>();
    if (doc.contains("store_dir")) config.store_dir = doc.at("store_dir").get<std::string>();
    if (doc.contains("prompts_dir")) config.prompts_dir = doc.at("prompts_dir").get<std::string>();
    if (doc.contains("manifest")) config.manifest = doc.at("manifest").get<std::string>();
    if (doc.contains("runner")) config.runner = doc.at("runner").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kValidation, std::string("bad config value: ") + e.what());
  }
}

}  // namespace

std::optional<std::string> process_env(const char* name) {
  if (const char* value = std::getenv(name)) return std::string(value);
  return std::nullopt;
}

AppConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  AppConfig config;
  const std::filesystem::path data_dir = CDAUG_DEFAULT_DATA_DIR;
  config.prompts_dir = data_dir / "prompts";
  config.manifest = data_dir / "tasks.json";

  if (file) apply_file(config, parse_json(read_file(*file)));

  if (auto v = env("CDAUG_LISTEN")) config.listen = *v;
  if (auto v = env("CDAUG_SERVER")) config.server = *v;
  if (auto v = env("CDAUG_WORKERS")) config.workers = parse_count(*v, "CDAUG_WORKERS");
  if (auto v = env("CDAUG_BACKEND_URL")) config.backend.url = *v;
  if (auto v = env("CDAUG_BACKEND_MODEL")) config.backend.model = *v;
  if (auto v = env("CDAUG_BACKEND_TOKEN")) config.backend.api_token = *v;
  if (auto v = env("CDAUG_SCORER_URL")) config.scorer_url = *v;
  if (auto v = env("CDAUG_STORE_DIR")) config.store_dir = *v;
  if (auto v = env("CDAUG_PROMPTS_DIR")) config.prompts_dir = *v;
  if (auto v = env("CDAUG_MANIFEST")) config.manifest = *v;
  if (auto v = env("CDAUG_RUNNER")) config.runner = *v;
  return config;
}

std::pair<std::string, int> parse_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == listen.size()) {
    throw Error(ErrorKind::kValidation, "listen address must be host:port, got '" + listen + "'");
  }
  const auto port_text = listen.substr(colon + 1);
  try {
    std::size_t used = 0;
    const int port = std::stoi(port_text, &used);
    if (used == port_text.size() && port >= 0 && port <= 65535) return {listen.substr(0, colon), port};
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::kValidation, "bad port in listen address '" + listen + "'");
}

std::shared_ptr<ChatBackend> make_backend(const AppConfig& config) {
  if (config.backend.url.empty()) return std::make_shared<MockChatBackend>();
  return std::make_shared<RemoteChatBackend>(config.backend);
}

std::shared_ptr<EntailmentScorer> make_scorer(const AppConfig& config) {
  if (config.scorer_url.empty()) return std::make_shared<LexicalEntailmentScorer>();
  return std::make_shared<RemoteNliScorer>(RemoteNliSettings{config.scorer_url});
}

}  // namespace cdaug
