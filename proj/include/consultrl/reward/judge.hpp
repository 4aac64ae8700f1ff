#pragma once

#include <cstdint>
#include <string_view>

#include "consultrl/agents/chat.hpp"
#include "consultrl/dialogue/episode.hpp"
#include "consultrl/reward/dimension_scores.hpp"
#include "consultrl/reward/reward.hpp"

namespace consultrl::reward {

// Scores one doctor response with the rubric evaluator. `response` is the
// doctor's full tagged output, reasoning included. Propagates TransportError
// and JudgeFormatError.
DimensionScores judge_turn(const agents::ChatBackend& judge, const dialogue::Observation& obs,
                           std::string_view ground_truth, std::string_view response,
                           std::uint64_t seed = 0);

// Reads the last JSON object's "verdict" (number or numeric string) and
// requires it to be exactly 0.0, 0.5 or 1.0. Throws JudgeFormatError.
Correctness parse_outcome_verdict(std::string_view text);

Correctness judge_outcome(const agents::ChatBackend& judge, std::string_view final_recommendation,
                          std::string_view ground_truth, std::uint64_t seed = 0);

}  // namespace consultrl::reward
