#include "consultrl/reward/judge.hpp"

#include <charconv>

#include "consultrl/agents/prompts.hpp"
#include "consultrl/agents/response_parser.hpp"
#include "consultrl/common/error.hpp"
#include "consultrl/common/text.hpp"

namespace consultrl::reward {

DimensionScores judge_turn(const agents::ChatBackend& judge, const dialogue::Observation& obs,
                           std::string_view ground_truth, std::string_view response,
                           std::uint64_t seed) {
  const auto messages = agents::build_turn_judge_prompt(obs, ground_truth, response);
  return agents::parse_judge_response(judge.complete(messages, seed));
}

Correctness parse_outcome_verdict(std::string_view text) {
  auto obj = agents::last_json_object(text);
  if (!obj) throw JudgeFormatError("outcome judge reply contains no JSON object");
  auto it = obj->find("verdict");
  if (it == obj->end()) throw JudgeFormatError("outcome judge reply has no 'verdict'");

  double value = 0.0;
  if (it->is_number()) {
    value = it->get<double>();
  } else if (it->is_string()) {
    const std::string s(text::trim(it->get<std::string>()));
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw JudgeFormatError("verdict '" + s + "' is not a number");
    }
  } else {
    throw JudgeFormatError("verdict must be a number");
  }
  if (value == 1.0) return Correctness::Correct;
  if (value == 0.5) return Correctness::Partial;
  if (value == 0.0) return Correctness::Incorrect;
  throw JudgeFormatError("verdict " + it->dump() + " is not one of 0.0, 0.5, 1.0");
}

Correctness judge_outcome(const agents::ChatBackend& judge, std::string_view final_recommendation,
                          std::string_view ground_truth, std::uint64_t seed) {
  const auto messages = agents::build_outcome_judge_prompt(final_recommendation, ground_truth);
  return parse_outcome_verdict(judge.complete(messages, seed));
}

}  // namespace consultrl::reward
