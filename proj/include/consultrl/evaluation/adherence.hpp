#pragma once

#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "consultrl/agents/chat.hpp"
#include "consultrl/dialogue/episode.hpp"

namespace consultrl::evaluation {

struct AdherenceRule {
  std::string id;
  std::string pattern;
  bool is_regex = false;
};

struct Violation {
  std::string rule_id;
  std::size_t turn_index = 0;
  std::string matched_text;

  bool operator==(const Violation&) const = default;
};

struct AdherenceReport {
  std::string episode_id;
  bool passed = true;  // true iff violations is empty
  std::vector<Violation> violations;
};

// Persona-break phrases for the simulated patient ("As a large language
// model", "as an AI", ...).
std::vector<AdherenceRule> default_patient_rules();

// Rules compiled once; matching is case-insensitive. Literal patterns are
// escaped. Throws InvalidPattern on a bad regex or an empty rule set.
class RuleSet {
 public:
  explicit RuleSet(const std::vector<AdherenceRule>& rules);

  // Every match of every rule in `text`, in rule order then position order.
  void scan(std::string_view text, std::size_t turn_index, std::vector<Violation>& out) const;

  bool empty() const noexcept { return compiled_.empty(); }

 private:
  struct Compiled {
    std::string id;
    std::regex re;
  };
  std::vector<Compiled> compiled_;
};

// Scans patient turns with `patient_rules`; doctor turns are scanned only
// when `doctor_rules` is given.
AdherenceReport adherence_filter(const dialogue::Episode& episode, const std::string& episode_id,
                                 const RuleSet& patient_rules,
                                 const RuleSet* doctor_rules = nullptr);

AdherenceReport adherence_filter(const dialogue::Episode& episode, const std::string& episode_id,
                                 const std::vector<AdherenceRule>& patient_rules);

// Optional model-based check of the patient side. The judge replies with
// {"adherence_score": 0..10}; the episode passes when score >= threshold.
struct LlmAdherenceResult {
  int score = 0;
  bool passed = false;
};

LlmAdherenceResult judge_patient_adherence(const agents::ChatBackend& judge,
                                           const dialogue::Episode& episode, int threshold,
                                           std::uint64_t seed = 0);

nlohmann::ordered_json to_json(const AdherenceReport& report);

// Reads rules from a JSON array [{"id", "pattern", "regex": bool}] or from a
// text file with one literal phrase per line ("re:" prefix marks a regex).
std::vector<AdherenceRule> load_rules(const std::string& path);

}  // namespace consultrl::evaluation
