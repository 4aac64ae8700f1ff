#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "consultrl/agents/chat.hpp"
#include "consultrl/dialogue/episode.hpp"
#include "consultrl/evaluation/adherence.hpp"
#include "consultrl/experience/repository.hpp"
#include "consultrl/experience/retrieval.hpp"
#include "consultrl/orchestrator/config.hpp"
#include "consultrl/reward/reward.hpp"

namespace consultrl::orchestrator {

enum class SeedRole : std::uint64_t { Doctor = 1, Patient = 2, Judge = 3, Opening = 4 };

// Per-call seed for one role within one rollout. Independent of scheduling.
std::uint64_t rollout_seed(std::uint64_t run_seed, std::string_view scenario_id,
                           std::size_t rollout, SeedRole role);

struct TurnAudit {
  std::size_t doctor_turn = 0;
  reward::DimensionScores scores;
  reward::RewardBranch branch = reward::RewardBranch::Weighted;
  double reward = 0.0;
};

struct EpisodeError {
  std::string kind;  // e.g. "TransportError"
  std::string message;
};

struct EpisodeResult {
  dialogue::Episode episode;
  std::size_t rollout = 0;
  // One (state, action, reward) draft per judged doctor turn.
  std::vector<experience::ExperienceDraft> drafts;
  std::vector<TurnAudit> audit;
  std::optional<EpisodeError> error;
};

// Everything one rollout reads. All members are shared across threads.
struct EpisodeContext {
  const agents::ChatBackend& doctor;
  const agents::ChatBackend& patient;
  const agents::ChatBackend& judge;
  const experience::ExperienceRepository* repository = nullptr;  // null disables retrieval
  const experience::Reranker* reranker = nullptr;
  dialogue::EpisodeConfig episode;
  reward::RewardConfig reward;
  experience::RetrievalConfig retrieval;
  agents::ParseMode parse_mode = agents::ParseMode::Strict;
  std::uint64_t seed = 0;
};

// The patient's first message: metadata "opening_complaint" when present,
// otherwise generated once per scenario by the patient backend.
std::string opening_complaint(const dialogue::PatientScenario& scenario,
                              const EpisodeContext& ctx);

// Runs one consultation to termination. Errors raised by backends, parsing
// or judging are caught and end the episode with termination Error.
EpisodeResult run_episode(const dialogue::PatientScenario& scenario, const std::string& opening,
                          std::size_t rollout, const EpisodeContext& ctx);

struct BatchSummary {
  std::size_t episodes_run = 0;
  std::size_t turn_rewards = 0;
  double mean_turn_reward = 0.0;
  std::map<std::string, std::size_t> outcomes;      // "0", "0.5", "1", "none"
  std::map<std::string, std::size_t> terminations;  // "recommended", "max_turns", "error"
  std::size_t stored_experiences = 0;
  std::size_t qc_failed = 0;
  std::size_t groups = 0;
  std::optional<double> mean_grpo_loss;
};

nlohmann::ordered_json to_json(const BatchSummary& summary);

// Files written under RunConfig::output_dir.
namespace outputs {
inline constexpr const char* kEpisodes = "episodes/episodes.jsonl";
inline constexpr const char* kExperiences = "experiences";
inline constexpr const char* kGroups = "groups/groups.jsonl";
inline constexpr const char* kSummary = "reports/summary.json";
inline constexpr const char* kQc = "reports/qc.jsonl";
inline constexpr const char* kAudit = "reports/reward_audit.jsonl";
inline constexpr const char* kErrors = "reports/errors.jsonl";
}  // namespace outputs

// Rolls out every scenario `rollouts_per_scenario` times with up to
// `parallelism` episodes in flight. Scenarios are processed in commit
// windows; at the end of each window the window's experiences are stored
// and the output files are rewritten, all in scenario then rollout order, so
// the outputs do not depend on parallelism.
BatchSummary run_batch(const RunConfig& config);

}  // namespace consultrl::orchestrator
