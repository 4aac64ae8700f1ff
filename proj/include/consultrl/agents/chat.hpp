#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace consultrl::agents {

enum class ChatRole { System, User, Assistant };

std::string_view to_string(ChatRole role) noexcept;

struct ChatMessage {
  ChatRole role = ChatRole::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct BackendConfig {
  std::string endpoint_url;  // base URL; requests go to {endpoint_url}/chat/completions
  std::string model_name;
  double temperature = 0.0;
  int max_tokens = 1024;
  int timeout_ms = 60000;
  int retry_limit = 2;
  int retry_backoff_ms = 250;
  int max_connections = 8;  // cap on concurrent in-flight requests
  std::string api_key;       // sent as "Authorization: Bearer <key>" when non-empty

  void validate() const;
};

/// A chat completion endpoint.
///
/// Implementations are stateless with respect to calls and safe to share
/// across threads. `seed` only matters for backends that honour it (the
/// mock does; remote HTTP servers are driven at temperature 0 instead).
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  // Validates the message list (non-empty, leading system message, non-empty
  // user/assistant content) then dispatches. Throws InvalidRequest,
  // TransportError or ProtocolError.
  std::string complete(const std::vector<ChatMessage>& messages, std::uint64_t seed = 0) const;

 protected:
  virtual std::string do_complete(const std::vector<ChatMessage>& messages,
                                  std::uint64_t seed) const = 0;
};

inline std::string chat_complete(const ChatBackend& backend,
                                 const std::vector<ChatMessage>& messages,
                                 std::uint64_t seed = 0) {
  return backend.complete(messages, seed);
}

}  // namespace consultrl::agents
