#include "consultrl/agents/chat.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "consultrl/agents/http_backend.hpp"
#include "consultrl/common/error.hpp"

namespace consultrl::agents {

using nlohmann::json;

std::string_view to_string(ChatRole role) noexcept {
  switch (role) {
    case ChatRole::System: return "system";
    case ChatRole::User: return "user";
    case ChatRole::Assistant: return "assistant";
  }
  return "user";
}

void BackendConfig::validate() const {
  if (retry_limit < 0) throw ConfigError("retry_limit must be >= 0");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
  if (timeout_ms <= 0) throw ConfigError("timeout_ms must be positive");
  if (max_connections <= 0) throw ConfigError("max_connections must be positive");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
}

std::string ChatBackend::complete(const std::vector<ChatMessage>& messages,
                                  std::uint64_t seed) const {
  if (messages.empty()) throw InvalidRequest("message list is empty");
  if (messages.front().role != ChatRole::System) {
    throw InvalidRequest("first message must have role=system");
  }
  for (const auto& m : messages) {
    if (m.role != ChatRole::System && m.content.empty()) {
      throw InvalidRequest(std::string(to_string(m.role)) + " message has empty content");
    }
  }
  return do_complete(messages, seed);
}

// ---------------------------------------------------------------------------

HttpChatBackend::HttpChatBackend(BackendConfig config)
    : config_(std::move(config)),
      transport_(config_.endpoint_url,
                 HttpPolicy{config_.timeout_ms, config_.retry_limit, config_.retry_backoff_ms,
                            config_.max_connections, config_.api_key}) {
  config_.validate();
}

json HttpChatBackend::request_body(const std::vector<ChatMessage>& messages) const {
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return {{"model", config_.model_name},
          {"messages", std::move(msgs)},
          {"temperature", config_.temperature},
          {"max_tokens", config_.max_tokens}};
}

std::string HttpChatBackend::do_complete(const std::vector<ChatMessage>& messages,
                                         std::uint64_t /*seed*/) const {
  return extract_completion_text(transport_.post("/chat/completions", request_body(messages)));
}

std::string extract_completion_text(const json& response) {
  if (!response.is_object()) throw ProtocolError("response is not a JSON object");
  auto choices = response.find("choices");
  if (choices == response.end() || !choices->is_array() || choices->empty()) {
    throw ProtocolError("response has no choices");
  }
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object()) {
    throw ProtocolError("choices[0] has no message");
  }
  const auto& message = first["message"];
  auto content = message.find("content");
  if (content == message.end() || !content->is_string()) {
    throw ProtocolError("choices[0].message.content missing or not a string");
  }
  return content->get<std::string>();
}

void apply_env_overrides(BackendConfig& config, std::string_view role) {
  std::string upper(role);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  const auto get = [](const std::string& name) -> const char* {
    const char* v = std::getenv(name.c_str());
    return (v && *v) ? v : nullptr;
  };
  if (const char* url = get("CONSULTRL_" + upper + "_ENDPOINT")) config.endpoint_url = url;
  for (const std::string& name :
       {"CONSULTRL_" + upper + "_API_KEY", std::string("CONSULTRL_API_KEY"),
        std::string("OPENAI_API_KEY")}) {
    if (const char* key = get(name)) {
      config.api_key = key;
      break;
    }
  }
}

}  // namespace consultrl::agents
