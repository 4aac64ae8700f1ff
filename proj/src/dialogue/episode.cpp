#include "consultrl/dialogue/episode.hpp"

#include <set>

#include "consultrl/common/error.hpp"
#include "consultrl/common/jsonl.hpp"

namespace consultrl::dialogue {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Role role) noexcept {
  return role == Role::Doctor ? "doctor" : "patient";
}

std::string_view to_string(ActionKind kind) noexcept {
  return kind == ActionKind::Inquiry ? "inquiry" : "recommendation";
}

std::string_view to_string(Termination termination) noexcept {
  switch (termination) {
    case Termination::Recommended: return "recommended";
    case Termination::MaxTurns: return "max_turns";
    case Termination::Error: return "error";
  }
  return "error";
}

std::string_view to_string(TerminalStatus status) noexcept {
  switch (status) {
    case TerminalStatus::Continue: return "continue";
    case TerminalStatus::Recommended: return "recommended";
    case TerminalStatus::MaxTurns: return "max_turns";
  }
  return "continue";
}

bool Observation::has_patient_turn() const noexcept {
  for (const auto& t : turns) {
    if (t.role == Role::Patient) return true;
  }
  return false;
}

void PatientScenario::validate() const {
  if (id.empty()) throw InvalidEpisode("scenario id is empty");
  if (persona.empty()) throw InvalidEpisode("scenario '" + id + "' has an empty persona");
  if (ground_truth.empty()) throw InvalidEpisode("scenario '" + id + "' has an empty ground_truth");
}

void EpisodeConfig::validate() const {
  if (max_turns < 1) throw ConfigError("episode.max_turns must be >= 1");
  if (!(decode_temperature >= 0.0)) throw ConfigError("episode.decode_temperature must be >= 0");
}

Episode::Episode(std::string scenario_id) : scenario_id_(std::move(scenario_id)) {}

Observation Episode::observation() const { return Observation{turns_}; }

Episode Episode::append_turn(Turn turn, std::optional<DoctorAction> action) const {
  if (is_closed()) throw EpisodeClosed("episode '" + scenario_id_ + "' is terminated");
  if (turn.index != turns_.size()) {
    throw IndexGap("expected turn index " + std::to_string(turns_.size()) + ", got " +
                   std::to_string(turn.index));
  }
  // Patient opens; roles alternate from there.
  const Role expected = turns_.size() % 2 == 0 ? Role::Patient : Role::Doctor;
  if (turn.role != expected) {
    throw RoleOrderViolation("turn " + std::to_string(turn.index) + " must be spoken by the " +
                             std::string(to_string(expected)));
  }
  if (turn.role == Role::Doctor) {
    if (!action) throw MissingAction("doctor turn " + std::to_string(turn.index) + " has no action");
    if (action->content.empty()) throw InvalidEpisode("doctor action content is empty");
    if (action->content != turn.content) {
      throw InvalidEpisode("doctor turn content does not match its action");
    }
    if (!actions_.empty() && actions_.back().kind == ActionKind::Recommendation) {
      throw InvalidEpisode("no doctor turn may follow a recommendation");
    }
    if (turn_rewards_.size() > actions_.size()) {
      throw InvalidEpisode("a penalized unparsed turn must end the episode");
    }
  } else if (action) {
    throw InvalidEpisode("patient turns carry no doctor action");
  }

  Episode next = *this;
  next.turns_.push_back(std::move(turn));
  if (action) next.actions_.push_back(std::move(*action));
  return next;
}

Episode Episode::append_action(DoctorAction action) const {
  Turn turn{turns_.size(), Role::Doctor, action.content};
  return append_turn(std::move(turn), std::move(action));
}

Episode Episode::append_patient(std::string content) const {
  return append_turn(Turn{turns_.size(), Role::Patient, std::move(content)});
}

Episode Episode::append_turn_reward(double reward) const {
  if (is_closed()) throw EpisodeClosed("episode '" + scenario_id_ + "' is terminated");
  if (!(reward >= -1.0 && reward <= 1.0)) {
    throw InvalidEpisode("turn reward out of [-1, 1]: " + std::to_string(reward));
  }
  // One reward per doctor turn, plus at most one for an attempt that failed
  // to parse (and therefore never became a turn).
  if (turn_rewards_.size() >= actions_.size() + 1) {
    throw InvalidEpisode("more turn rewards than scored doctor turns");
  }
  Episode next = *this;
  next.turn_rewards_.push_back(reward);
  return next;
}

Episode Episode::close(Termination termination, std::optional<double> outcome_reward) const {
  if (is_closed()) throw EpisodeClosed("episode '" + scenario_id_ + "' is terminated");
  if (outcome_reward && *outcome_reward != 0.0 && *outcome_reward != 0.5 &&
      *outcome_reward != 1.0) {
    throw InvalidEpisode("outcome reward must be one of 0.0, 0.5, 1.0");
  }
  const bool last_recommends =
      !actions_.empty() && actions_.back().kind == ActionKind::Recommendation;
  if (termination == Termination::Recommended && !last_recommends) {
    throw InvalidEpisode("Recommended termination without a final recommendation");
  }
  if (termination != Termination::Error && turn_rewards_.size() > actions_.size()) {
    throw InvalidEpisode("penalized unparsed turn requires Error termination");
  }
  Episode next = *this;
  next.termination_ = termination;
  next.outcome_reward_ = outcome_reward;
  return next;
}

TerminalStatus is_terminal(const Episode& episode, const EpisodeConfig& config) noexcept {
  const auto actions = episode.actions();
  if (!actions.empty() && actions.back().kind == ActionKind::Recommendation) {
    return TerminalStatus::Recommended;
  }
  if (episode.doctor_turn_count() >= static_cast<std::size_t>(config.max_turns)) {
    return TerminalStatus::MaxTurns;
  }
  return TerminalStatus::Continue;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

Role role_from(const std::string& s) {
  if (s == "doctor") return Role::Doctor;
  if (s == "patient") return Role::Patient;
  throw InvalidEpisode("unknown role '" + s + "'");
}

ActionKind kind_from(const std::string& s) {
  if (s == "inquiry") return ActionKind::Inquiry;
  if (s == "recommendation") return ActionKind::Recommendation;
  throw InvalidEpisode("unknown action kind '" + s + "'");
}

Termination termination_from(const std::string& s) {
  if (s == "recommended") return Termination::Recommended;
  if (s == "max_turns") return Termination::MaxTurns;
  if (s == "error") return Termination::Error;
  throw InvalidEpisode("unknown termination '" + s + "'");
}

}  // namespace

ordered_json to_json(const Episode& episode) {
  ordered_json turns = ordered_json::array();
  for (const auto& t : episode.turns()) {
    turns.push_back({{"index", t.index}, {"role", to_string(t.role)}, {"content", t.content}});
  }
  ordered_json actions = ordered_json::array();
  for (const auto& a : episode.actions()) {
    actions.push_back(
        {{"reasoning", a.reasoning}, {"kind", to_string(a.kind)}, {"content", a.content}});
  }
  ordered_json rewards = ordered_json::array();
  for (double r : episode.turn_rewards()) rewards.push_back(r);

  ordered_json out;
  out["scenario_id"] = episode.scenario_id();
  out["turns"] = std::move(turns);
  out["actions"] = std::move(actions);
  out["turn_rewards"] = std::move(rewards);
  out["outcome_reward"] =
      episode.outcome_reward() ? ordered_json(*episode.outcome_reward()) : ordered_json(nullptr);
  out["termination"] = episode.termination()
                           ? ordered_json(std::string(to_string(*episode.termination())))
                           : ordered_json(nullptr);
  return out;
}

Episode episode_from_json(const json& record) {
  try {
    Episode ep(record.at("scenario_id").get<std::string>());
    const auto& actions = record.at("actions");
    std::size_t next_action = 0;
    for (const auto& t : record.at("turns")) {
      Turn turn{t.at("index").get<std::size_t>(), role_from(t.at("role").get<std::string>()),
                t.at("content").get<std::string>()};
      std::optional<DoctorAction> action;
      if (turn.role == Role::Doctor) {
        if (next_action >= actions.size()) throw MissingAction("actions shorter than doctor turns");
        const auto& a = actions.at(next_action++);
        action = DoctorAction{a.at("reasoning").get<std::string>(),
                              kind_from(a.at("kind").get<std::string>()),
                              a.at("content").get<std::string>()};
      }
      ep = ep.append_turn(std::move(turn), std::move(action));
    }
    if (next_action != actions.size()) throw InvalidEpisode("actions longer than doctor turns");
    // Rewards may only be appended while the episode is open, so interleave
    // them before sealing.
    for (const auto& r : record.at("turn_rewards")) ep = ep.append_turn_reward(r.get<double>());
    const auto& outcome = record.at("outcome_reward");
    const auto& term = record.at("termination");
    if (!term.is_null()) {
      ep = ep.close(termination_from(term.get<std::string>()),
                    outcome.is_null() ? std::nullopt : std::optional<double>(outcome.get<double>()));
    } else if (!outcome.is_null()) {
      throw InvalidEpisode("outcome_reward set on an open episode");
    }
    return ep;
  } catch (const json::exception& e) {
    throw InvalidEpisode(std::string("malformed episode record: ") + e.what());
  }
}

ordered_json to_json(const PatientScenario& scenario) {
  ordered_json meta = ordered_json::object();
  for (const auto& [k, v] : scenario.metadata) meta[k] = v;
  return {{"id", scenario.id},
          {"persona", scenario.persona},
          {"ground_truth", scenario.ground_truth},
          {"metadata", std::move(meta)}};
}

PatientScenario scenario_from_json(const json& record) {
  try {
    PatientScenario s;
    s.id = record.at("id").get<std::string>();
    s.persona = record.at("persona").get<std::string>();
    s.ground_truth = record.at("ground_truth").get<std::string>();
    if (auto it = record.find("metadata"); it != record.end() && !it->is_null()) {
      for (const auto& [k, v] : it->items()) {
        s.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw InvalidEpisode(std::string("malformed scenario record: ") + e.what());
  }
}

std::vector<PatientScenario> load_scenarios(const std::string& path) {
  std::vector<PatientScenario> out;
  std::set<std::string> seen;
  for (const auto& record : jsonl::read_file(path)) {
    auto s = scenario_from_json(record);
    if (!seen.insert(s.id).second) throw InvalidEpisode("duplicate scenario id '" + s.id + "'");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace consultrl::dialogue
