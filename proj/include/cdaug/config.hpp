#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "cdaug/backend.hpp"
#include "cdaug/entailment.hpp"

namespace cdaug {

/// Runtime settings shared by the CLI subcommands. Resolution order:
/// built-in defaults, then the JSON config file, then CDAUG_* environment
/// variables.
struct AppConfig {
  std::string listen = "127.0.0.1:8080";
  std::string server = "http://127.0.0.1:8080";
  std::size_t workers = 2;
  // Empty url selects the deterministic mock backend.
  RemoteBackendSettings backend;
  // Empty url selects the lexical scorer.
  std::string scorer_url;
  std::filesystem::path store_dir = "cdaug-store";
  std::filesystem::path prompts_dir;
  std::filesystem::path manifest;
  std::filesystem::path runner;
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

/// Reads the process environment.
std::optional<std::string> process_env(const char* name);

/// Error(kValidation) for unknown keys or mistyped values, Error(kNotFound)
/// for a missing file.
AppConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = process_env);

/// "host:port" -> (host, port). Error(kValidation) when malformed.
std::pair<std::string, int> parse_listen(const std::string& listen);

std::shared_ptr<ChatBackend> make_backend(const AppConfig& config);
std::shared_ptr<EntailmentScorer> make_scorer(const AppConfig& config);

}  // namespace cdaug
