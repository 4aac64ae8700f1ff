#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "consultrl/dialogue/episode.hpp"
#include "consultrl/reward/dimension_scores.hpp"

namespace consultrl::agents {

enum class ParseMode {
  Strict,   // a non-empty <think> block is required
  Lenient,  // a missing <think> block yields empty reasoning
};

// Reads "<think>…</think><answer>Question: …</answer>" (or "Recommendation:").
// Only the first block of each tag is used. Throws FormatViolation.
dialogue::DoctorAction parse_doctor_response(std::string_view text,
                                             ParseMode mode = ParseMode::Strict);

// Canonical tagged form; parse_doctor_response inverts it.
std::string render_doctor_action(const dialogue::DoctorAction& action);

// The last JSON object embedded in free text, if any. Objects are found by
// brace matching that respects string literals, then validated by parsing.
std::optional<nlohmann::json> last_json_object(std::string_view text);

// Requires all eight integer dimension fields, each within [-5, 5].
// Throws JudgeFormatError.
reward::DimensionScores parse_judge_response(std::string_view text);

}  // namespace consultrl::agents
