#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace consultrl::dialogue {

enum class Role { Doctor, Patient };
enum class ActionKind { Inquiry, Recommendation };
enum class Termination { Recommended, MaxTurns, Error };
enum class TerminalStatus { Continue, Recommended, MaxTurns };

std::string_view to_string(Role role) noexcept;
std::string_view to_string(ActionKind kind) noexcept;
std::string_view to_string(Termination termination) noexcept;
std::string_view to_string(TerminalStatus status) noexcept;

struct Turn {
  std::size_t index = 0;
  Role role = Role::Patient;
  std::string content;

  bool operator==(const Turn&) const = default;
};

// The dialogue history visible to the doctor at one point in time.
struct Observation {
  std::vector<Turn> turns;

  bool has_patient_turn() const noexcept;
  bool operator==(const Observation&) const = default;
};

struct DoctorAction {
  std::string reasoning;
  ActionKind kind = ActionKind::Inquiry;
  std::string content;

  bool operator==(const DoctorAction&) const = default;
};

struct PatientScenario {
  std::string id;
  std::string persona;
  std::string ground_truth;  // expert reply; only the judge ever sees it
  std::map<std::string, std::string> metadata;

  void validate() const;
};

struct EpisodeConfig {
  int max_turns = 10;  // counted in doctor turns
  double decode_temperature = 0.0;

  void validate() const;
};

/// One consultation rollout.
///
/// Values are immutable: every mutator returns an extended copy and leaves
/// the receiver untouched, so a history captured at step t stays a prefix of
/// every later one. Once `termination()` is set no further turns, rewards or
/// outcome changes are accepted.
class Episode {
 public:
  explicit Episode(std::string scenario_id);

  const std::string& scenario_id() const noexcept { return scenario_id_; }
  std::span<const Turn> turns() const noexcept { return turns_; }
  std::span<const DoctorAction> actions() const noexcept { return actions_; }
  std::span<const double> turn_rewards() const noexcept { return turn_rewards_; }
  std::optional<double> outcome_reward() const noexcept { return outcome_reward_; }
  std::optional<Termination> termination() const noexcept { return termination_; }
  bool is_closed() const noexcept { return termination_.has_value(); }

  std::size_t doctor_turn_count() const noexcept { return actions_.size(); }
  Observation observation() const;

  // Throws IndexGap, then RoleOrderViolation (checked in that order), or
  // EpisodeClosed. Doctor turns must carry the parsed action they came from;
  // its content must match the turn content.
  [[nodiscard]] Episode append_turn(Turn turn,
                                    std::optional<DoctorAction> action = std::nullopt) const;

  // Convenience: appends the next doctor turn built from `action`.
  [[nodiscard]] Episode append_action(DoctorAction action) const;
  [[nodiscard]] Episode append_patient(std::string content) const;

  [[nodiscard]] Episode append_turn_reward(double reward) const;

  // Seals the episode. Recommended requires the last action to be a
  // recommendation; the outcome reward must be 0, 0.5 or 1 when present.
  [[nodiscard]] Episode close(Termination termination,
                              std::optional<double> outcome_reward) const;

  bool operator==(const Episode&) const = default;

 private:
  std::string scenario_id_;
  std::vector<Turn> turns_;
  std::vector<DoctorAction> actions_;
  std::vector<double> turn_rewards_;
  std::optional<double> outcome_reward_;
  std::optional<Termination> termination_;
};

TerminalStatus is_terminal(const Episode& episode, const EpisodeConfig& config) noexcept;

// JSONL schema: {scenario_id, turns, actions, turn_rewards, outcome_reward, termination}
nlohmann::ordered_json to_json(const Episode& episode);
// Rebuilds through the checked mutators, so malformed records raise the same
// errors a live rollout would (or InvalidEpisode for schema problems).
Episode episode_from_json(const nlohmann::json& record);

nlohmann::ordered_json to_json(const PatientScenario& scenario);
PatientScenario scenario_from_json(const nlohmann::json& record);

// Loads a JSONL scenario file; ids must be unique.
std::vector<PatientScenario> load_scenarios(const std::string& path);

}  // namespace consultrl::dialogue
