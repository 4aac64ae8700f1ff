#include "consultrl/evaluation/adherence.hpp"

#include <fstream>

#include "consultrl/agents/prompts.hpp"
#include "consultrl/agents/response_parser.hpp"
#include "consultrl/common/error.hpp"
#include "consultrl/common/text.hpp"

namespace consultrl::evaluation {

using dialogue::Role;
using nlohmann::json;

std::vector<AdherenceRule> default_patient_rules() {
  return {
      {"persona.large_language_model", "As a large language model", false},
      {"persona.language_model", "as a language model", false},
      {"persona.ai_language_model", "as an AI language model", false},
      {"persona.as_an_ai", R"(\bas an ai\b)", true},
      {"persona.i_am_an_ai", R"(\bi(?: am|'m) (?:an ai|a language model|an artificial intelligence)\b)",
       true},
      {"persona.virtual_assistant", "I am a virtual assistant", false},
  };
}

namespace {
std::string escape_regex(std::string_view literal) {
  static constexpr std::string_view kSpecial = R"(\^$.|?*+()[]{})";
  std::string out;
  for (char c : literal) {
    if (kSpecial.find(c) != std::string_view::npos) out += '\\';
    out += c;
  }
  return out;
}
}  // namespace

RuleSet::RuleSet(const std::vector<AdherenceRule>& rules) {
  if (rules.empty()) throw InvalidPattern("adherence rule set is empty");
  for (const auto& r : rules) {
    if (r.pattern.empty()) throw InvalidPattern("rule '" + r.id + "' has an empty pattern");
    try {
      compiled_.push_back(
          {r.id, std::regex(r.is_regex ? r.pattern : escape_regex(r.pattern),
                            std::regex::ECMAScript | std::regex::icase)});
    } catch (const std::regex_error& e) {
      throw InvalidPattern("rule '" + r.id + "': " + e.what());
    }
  }
}

void RuleSet::scan(std::string_view text, std::size_t turn_index,
                   std::vector<Violation>& out) const {
  const std::string s(text);
  for (const auto& rule : compiled_) {
    for (auto it = std::sregex_iterator(s.begin(), s.end(), rule.re); it != std::sregex_iterator();
         ++it) {
      out.push_back({rule.id, turn_index, it->str()});
    }
  }
}

AdherenceReport adherence_filter(const dialogue::Episode& episode, const std::string& episode_id,
                                 const RuleSet& patient_rules, const RuleSet* doctor_rules) {
  AdherenceReport report;
  report.episode_id = episode_id;
  for (const auto& turn : episode.turns()) {
    if (turn.role == Role::Patient) {
      patient_rules.scan(turn.content, turn.index, report.violations);
    } else if (doctor_rules) {
      doctor_rules->scan(turn.content, turn.index, report.violations);
    }
  }
  report.passed = report.violations.empty();
  return report;
}

AdherenceReport adherence_filter(const dialogue::Episode& episode, const std::string& episode_id,
                                 const std::vector<AdherenceRule>& patient_rules) {
  return adherence_filter(episode, episode_id, RuleSet(patient_rules));
}

LlmAdherenceResult judge_patient_adherence(const agents::ChatBackend& judge,
                                           const dialogue::Episode& episode, int threshold,
                                           std::uint64_t seed) {
  const auto reply =
      judge.complete(agents::build_adherence_judge_prompt(episode.observation()), seed);
  auto obj = agents::last_json_object(reply);
  if (!obj || !obj->contains("adherence_score") || !(*obj)["adherence_score"].is_number_integer()) {
    throw JudgeFormatError("adherence judge reply lacks an integer adherence_score");
  }
  const int score = (*obj)["adherence_score"].get<int>();
  if (score < 0 || score > 10) throw JudgeFormatError("adherence_score outside [0, 10]");
  return {score, score >= threshold};
}

nlohmann::ordered_json to_json(const AdherenceReport& report) {
  nlohmann::ordered_json violations = nlohmann::ordered_json::array();
  for (const auto& v : report.violations) {
    violations.push_back(
        {{"rule_id", v.rule_id}, {"turn_index", v.turn_index}, {"matched_text", v.matched_text}});
  }
  nlohmann::ordered_json out;
  out["episode_id"] = report.episode_id;
  out["passed"] = report.passed;
  out["violations"] = std::move(violations);
  return out;
}

std::vector<AdherenceRule> load_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rule file " + path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<AdherenceRule> rules;
  const auto trimmed = text::trim(content);
  if (!trimmed.empty() && trimmed.front() == '[') {
    try {
      for (const auto& r : json::parse(trimmed)) {
        rules.push_back({r.at("id").get<std::string>(), r.at("pattern").get<std::string>(),
                         r.value("regex", false)});
      }
    } catch (const json::exception& e) {
      throw InvalidPattern(std::string("malformed rule file: ") + e.what());
    }
    return rules;
  }
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    const auto line = text::trim(std::string_view(content).substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty() || line.front() == '#') continue;
    ++n;
    if (text::istarts_with(line, "re:")) {
      rules.push_back({"rule." + std::to_string(n), std::string(text::trim(line.substr(3))), true});
    } else {
      rules.push_back({"rule." + std::to_string(n), std::string(line), false});
    }
  }
  return rules;
}

}  // namespace consultrl::evaluation
