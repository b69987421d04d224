#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

namespace cdaug {

struct BackendCapability {
  std::string name;
  bool deterministic = false;
};

enum class RequestPurpose {
  kRewrite,  // synthesize a semantically similar input
  kAnswer,   // produce the output for a (synthetic) input
};

struct ChatRequest {
  std::string system;
  std::string user;
  double temperature = 0.7;
  int max_tokens = 256;
  std::optional<std::uint64_t> seed;
  // 1-based index of the variant this call produces; distinguishes the k
  // independent calls issued for one history item.
  std::size_t sample_index = 1;
  RequestPurpose purpose = RequestPurpose::kRewrite;
  // The raw text the prompt was rendered around. Remote backends never send
  // it; test doubles use it in place of a language model.
  std::string subject;
};

/// A chat-completion model. complete() returns exactly one text or throws
/// Error(kTransport). Implementations must tolerate concurrent calls.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual BackendCapability capability() const = 0;
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// Deterministic stand-in for the cloud model.
///
/// Rewrite: the canonical tokens of the subject rotated left by
/// sample_index, joined by single spaces. Answer: the first min(8, n)
/// canonical tokens of the subject.
class MockChatBackend final : public ChatBackend {
 public:
  BackendCapability capability() const override { return {"mock", true}; }
  std::string complete(const ChatRequest& request) override;
};

struct RemoteBackendSettings {
  std::string url;  // full endpoint, e.g. http://host:8000/v1/chat/completions
  std::string model;
  std::string api_token;  // sent as a bearer token when non-empty
  std::chrono::seconds timeout{120};
};

/// OpenAI-style chat-completion client:
/// {model, messages:[{role, content}], temperature, max_tokens[, seed]}.
class RemoteChatBackend final : public ChatBackend {
 public:
  explicit RemoteChatBackend(RemoteBackendSettings settings);

  BackendCapability capability() const override { return {"remote:" + settings_.model, false}; }
  std::string complete(const ChatRequest& request) override;

 private:
  RemoteBackendSettings settings_;
};

}  // namespace cdaug
