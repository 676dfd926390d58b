#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace openpref {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

struct ChatRequest {
  // Name of the prompt template the request was rendered from. Routing
  // metadata only; it is not sent over the wire.
  std::string template_name;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;

  /// Concatenated message contents; the unit that fixtures are keyed on.
  std::string prompt_text() const;
};

struct ChatResponse {
  std::string content;
  double latency_ms = 0.0;
};

/// Chat-completion backend. Implementations must be safe to call from
/// several threads at once.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

struct RemoteClientConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4";
  std::string api_key_env = "OPENPREF_API_KEY";
  double timeout_seconds = 60.0;
  int transport_attempts = 2;  // connection failures, HTTP 429 and 5xx are retried
};

/// Speaks the common chat-completions JSON wire format:
/// POST {model, messages: [{role, content}], temperature} and reads
/// choices[0].message.content. The API key is read from the environment.
class RemoteChatClient final : public ChatClient {
 public:
  explicit RemoteChatClient(RemoteClientConfig config);
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "remote:" + config_.model; }

 private:
  RemoteClientConfig config_;
  std::string api_key_;
};

/// Offline client. Looks a request up, in order, as
///   <fixture_dir>/<sha256 of prompt text>.txt
///   <fixture_dir>/<template_name>.txt
/// and otherwise, when synthesis is enabled, produces a deterministic,
/// well-formed response derived from the prompt itself.
class MockChatClient final : public ChatClient {
 public:
  explicit MockChatClient(std::optional<std::filesystem::path> fixture_dir = std::nullopt,
                          bool synthesize = true);

  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "mock"; }

  std::size_t call_count() const noexcept { return calls_.load(); }

 private:
  std::optional<std::filesystem::path> fixture_dir_;
  bool synthesize_;
  std::atomic<std::size_t> calls_{0};
};

/// Key used by MockChatClient fixture files.
std::string prompt_fingerprint(const std::string& prompt_text);

/// Deterministic stand-in responses used by MockChatClient.
std::string synthesize_response(const ChatRequest& request);

}  // namespace openpref
