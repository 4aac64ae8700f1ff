#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "consultrl/dialogue/episode.hpp"

namespace consultrl::grpo {

struct ScoredResponse {
  std::string text;
  double reward = 0.0;

  bool operator==(const ScoredResponse&) const = default;
};

// One prompt, the preferred response, and the responses it is contrasted with.
struct GrpoGroup {
  std::string prompt;
  ScoredResponse chosen;
  std::vector<ScoredResponse> rejected;

  bool operator==(const GrpoGroup&) const = default;
};

// -log( exp(R_c) / Σ_{y ∈ {c} ∪ rejected} exp(R_y) ), evaluated as a
// log-sum-exp shifted by the group maximum. When the chosen reward is the
// maximum this reduces to log1p(Σ_j exp(R_j - R_c)), which stays accurate in
// the dominance limit. Throws EmptyGroup (no rejected responses) or
// std::invalid_argument for non-finite rewards.
double grpo_loss(const GrpoGroup& group);

// Mean loss over groups; 0 for an empty span.
double mean_grpo_loss(std::span<const GrpoGroup> groups);

// Chosen = highest reward, lowest index on ties; the rest are rejected in
// their original order. Throws TooFewRollouts for fewer than two rollouts.
GrpoGroup build_group(std::string prompt, std::span<const ScoredResponse> rollouts);

enum class GroupRewardMode {
  OutcomePlusMeanTurn,  // outcome reward (absent counts as 0) + mean turn reward
  OutcomeOnly,
};

GroupRewardMode group_reward_mode_from_string(std::string_view name);
std::string_view to_string(GroupRewardMode mode) noexcept;

// Scalar reward of one rollout for grouping.
double episode_group_reward(const dialogue::Episode& episode, GroupRewardMode mode);

// {"prompt", "chosen", "rejected": [...], "rewards": [chosen, rejected...], "loss"}
nlohmann::ordered_json to_json(const GrpoGroup& group);
GrpoGroup group_from_json(const nlohmann::json& record);

// Writes one record per group (atomically replacing `path`); returns the count.
std::size_t export_training_records(std::span<const GrpoGroup> groups,
                                    const std::filesystem::path& path);
std::vector<GrpoGroup> read_training_records(const std::filesystem::path& path);

}  // namespace consultrl::grpo
