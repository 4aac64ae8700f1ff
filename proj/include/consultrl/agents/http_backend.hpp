#pragma once

#include <string_view>

#include "consultrl/agents/chat.hpp"
#include "consultrl/agents/http_transport.hpp"

namespace consultrl::agents {

// OpenAI-compatible chat completions client.
//
// Request:  POST {endpoint_url}/chat/completions
//           {"model", "messages", "temperature", "max_tokens"}
// Response: choices[0].message.content
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(BackendConfig config);

  const BackendConfig& config() const noexcept { return config_; }

  // Exposed for tests: the exact body that would be sent.
  nlohmann::json request_body(const std::vector<ChatMessage>& messages) const;

 protected:
  std::string do_complete(const std::vector<ChatMessage>& messages,
                          std::uint64_t seed) const override;

 private:
  BackendConfig config_;
  JsonHttpTransport transport_;
};

// Extracts choices[0].message.content or throws ProtocolError.
std::string extract_completion_text(const nlohmann::json& response);

// Environment overrides for a backend role ("doctor", "patient", "judge", ...):
//   CONSULTRL_<ROLE>_ENDPOINT  -> endpoint_url
//   CONSULTRL_<ROLE>_API_KEY, else CONSULTRL_API_KEY, else OPENAI_API_KEY -> api_key
void apply_env_overrides(BackendConfig& config, std::string_view role);

}  // namespace consultrl::agents
