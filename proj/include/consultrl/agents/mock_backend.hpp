#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "consultrl/agents/chat.hpp"

namespace consultrl::agents {

// What a mock says when no scripted rule matches.
enum class MockProfile { Doctor, Patient, Judge };

std::optional<MockProfile> mock_profile_from_string(std::string_view name);

// A scripted reply. Every condition that is set must hold:
//   content_hash  equals MockChatBackend::content_hash(messages)
//   contains      occurs in the last message
//   count_text    occurs exactly count_equals times in the last message
// When several replies are listed, one is picked by the seeded hash.
struct MockRule {
  std::optional<std::uint64_t> content_hash;
  std::optional<std::string> contains;
  std::optional<std::string> count_text;
  int count_equals = 0;
  std::vector<std::string> replies;
};

struct MockScript {
  std::vector<MockRule> rules;
  MockProfile fallback = MockProfile::Doctor;
};

// JSON form:
// {"fallback": "doctor"|"patient"|"judge",
//  "rules": [{"hash": "0x1234...", "contains": "...", "count": {"text": "...", "equals": 2},
//             "reply": "..." | "replies": ["...", ...]}]}
MockScript mock_script_from_json(const nlohmann::json& doc);
MockScript load_mock_script(const std::filesystem::path& path);

/// Offline stand-in for a chat endpoint.
///
/// The reply is a pure function of (configured seed, call seed, message
/// contents): the first matching rule wins, otherwise a profile template is
/// chosen by a 64-bit FNV-1a hash of the seeds and the concatenated contents.
class MockChatBackend final : public ChatBackend {
 public:
  MockChatBackend(MockScript script, std::uint64_t seed);

  // Seed-independent hash of the message contents, for writing hash rules.
  static std::uint64_t content_hash(const std::vector<ChatMessage>& messages);
  // The hash that drives template selection for a given effective seed.
  static std::uint64_t seeded_hash(const std::vector<ChatMessage>& messages, std::uint64_t seed);

 protected:
  std::string do_complete(const std::vector<ChatMessage>& messages,
                          std::uint64_t seed) const override;

 private:
  MockScript script_;
  std::uint64_t seed_;
};

}  // namespace consultrl::agents
