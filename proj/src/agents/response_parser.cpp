#include "consultrl/agents/response_parser.hpp"

#include <cmath>

#include "consultrl/common/error.hpp"
#include "consultrl/common/text.hpp"

namespace consultrl::agents {

using dialogue::ActionKind;
using dialogue::DoctorAction;
using nlohmann::json;

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";
constexpr std::string_view kQuestionPrefix = "Question:";
constexpr std::string_view kRecommendationPrefix = "Recommendation:";

struct Block {
  std::string_view inner;
  std::size_t end = 0;  // one past the closing tag
};

std::optional<Block> find_block(std::string_view text, std::string_view open,
                                std::string_view close, std::size_t from) {
  const std::size_t start = text.find(open, from);
  if (start == std::string_view::npos) return std::nullopt;
  const std::size_t inner_begin = start + open.size();
  const std::size_t stop = text.find(close, inner_begin);
  if (stop == std::string_view::npos) {
    throw FormatViolation("unclosed " + std::string(open) + " block");
  }
  return Block{text.substr(inner_begin, stop - inner_begin), stop + close.size()};
}

}  // namespace

DoctorAction parse_doctor_response(std::string_view text, ParseMode mode) {
  DoctorAction action;
  std::size_t answer_from = 0;
  if (auto think = find_block(text, kThinkOpen, kThinkClose, 0)) {
    action.reasoning = std::string(text::trim(think->inner));
    if (action.reasoning.empty()) throw FormatViolation("empty <think> block");
    answer_from = think->end;
  } else if (mode == ParseMode::Strict) {
    throw FormatViolation("missing <think> block");
  }

  auto answer = find_block(text, kAnswerOpen, kAnswerClose, answer_from);
  if (!answer) throw FormatViolation("missing <answer> block");

  const std::string_view payload = text::trim(answer->inner);
  std::string_view rest;
  if (text::istarts_with(payload, kQuestionPrefix)) {
    action.kind = ActionKind::Inquiry;
    rest = payload.substr(kQuestionPrefix.size());
  } else if (text::istarts_with(payload, kRecommendationPrefix)) {
    action.kind = ActionKind::Recommendation;
    rest = payload.substr(kRecommendationPrefix.size());
  } else {
    throw FormatViolation("answer must start with 'Question:' or 'Recommendation:'");
  }
  action.content = std::string(text::trim(rest));
  if (action.content.empty()) throw FormatViolation("answer payload is empty");
  return action;
}

std::string render_doctor_action(const DoctorAction& action) {
  std::string out;
  out += kThinkOpen;
  out += action.reasoning;
  out += kThinkClose;
  out += '\n';
  out += kAnswerOpen;
  out += action.kind == ActionKind::Inquiry ? kQuestionPrefix : kRecommendationPrefix;
  out += ' ';
  out += action.content;
  out += kAnswerClose;
  return out;
}

std::optional<json> last_json_object(std::string_view text) {
  std::optional<json> last;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '{') {
      ++i;
      continue;
    }
    // Scan to the matching close brace, skipping over string literals.
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    std::size_t j = i;
    for (; j < text.size(); ++j) {
      const char c = text[j];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) break;
    }
    if (j < text.size()) {
      auto parsed = json::parse(text.substr(i, j - i + 1), nullptr, /*allow_exceptions=*/false);
      if (!parsed.is_discarded() && parsed.is_object()) {
        last = std::move(parsed);
        i = j + 1;
        continue;
      }
    }
    ++i;
  }
  return last;
}

reward::DimensionScores parse_judge_response(std::string_view text) {
  auto obj = last_json_object(text);
  if (!obj) throw JudgeFormatError("judge reply contains no JSON object");

  reward::DimensionScores scores;
  for (std::size_t d = 0; d < reward::kDimensionCount; ++d) {
    const std::string name(reward::kDimensionNames[d]);
    auto it = obj->find(name);
    if (it == obj->end()) throw JudgeFormatError("judge scores missing field '" + name + "'");
    long long value = 0;
    if (it->is_number_integer()) {
      value = it->get<long long>();
    } else if (it->is_number_float()) {
      const double v = it->get<double>();
      if (!std::isfinite(v) || v != std::floor(v)) {
        throw JudgeFormatError("field '" + name + "' is not an integer");
      }
      value = static_cast<long long>(v);
    } else {
      throw JudgeFormatError("field '" + name + "' is not a number");
    }
    if (value < -reward::kJudgeScoreLimit || value > reward::kJudgeScoreLimit) {
      throw JudgeFormatError("field '" + name + "' = " + std::to_string(value) +
                             " outside [-5, 5]");
    }
    scores.values[d] = static_cast<int>(value);
  }
  return scores;
}

}  // namespace consultrl::agents
