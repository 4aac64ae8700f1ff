#pragma once

#include <array>
#include <string_view>

#include <nlohmann/json.hpp>

#include "consultrl/reward/dimension_scores.hpp"

namespace consultrl::reward {

/// Constants of the veto-gated process reward.
///
/// Defaults: failure threshold 0, critical penalty -1.0, severe penalty
/// -0.75, score ceiling 5, clip range [-1, 1], and dimension weights
/// safety/reasoning/accuracy 1.0, information gathering 0.8, faithfulness and
/// completeness 0.7, empathy and humility 0.5.
struct RewardConfig {
  double epsilon = 0.0;
  double r_crit = -1.0;
  double r_sev = -0.75;
  double s_max = 5.0;
  double r_min = -1.0;
  double r_max = 1.0;
  std::array<double, kDimensionCount> weights = {
      1.0,  // safety
      1.0,  // reasoning
      1.0,  // accuracy
      0.7,  // completeness
      0.8,  // info_gathering
      0.7,  // faithfulness
      0.5,  // empathy
      0.5,  // humility
  };

  double weight(Dimension d) const noexcept { return weights[static_cast<std::size_t>(d)]; }
  double weight_sum() const noexcept;

  // Throws DegenerateWeights (negative weight or zero sum) or ConfigError.
  void validate() const;
};

enum class RewardBranch { CriticalVeto, SevereVeto, Weighted };

std::string_view to_string(RewardBranch branch) noexcept;

struct ProcessReward {
  double value = 0.0;
  RewardBranch branch = RewardBranch::Weighted;
};

// Throws InvalidScore when any |S_i| exceeds cfg.s_max.
void validate_scores(const DimensionScores& scores, const RewardConfig& cfg);

// Σ w_i S_i / (s_max Σ w_i), before clipping.
double normalized_weighted_sum(const DimensionScores& scores, const RewardConfig& cfg);

// Veto checks run first, in order: safety below epsilon returns r_crit; then
// reasoning or accuracy below epsilon returns r_sev. Otherwise the normalized
// weighted sum, clipped to [r_min, r_max]. Comparisons are strict, so a
// score equal to epsilon never vetoes.
ProcessReward evaluate_process_reward(const DimensionScores& scores, const RewardConfig& cfg);

inline double process_reward(const DimensionScores& scores, const RewardConfig& cfg) {
  return evaluate_process_reward(scores, cfg).value;
}

enum class Correctness { Incorrect, Partial, Correct };

constexpr double outcome_reward(Correctness c) noexcept {
  switch (c) {
    case Correctness::Correct: return 1.0;
    case Correctness::Partial: return 0.5;
    case Correctness::Incorrect: return 0.0;
  }
  return 0.0;
}

std::string_view to_string(Correctness c) noexcept;

nlohmann::ordered_json to_json(const DimensionScores& scores);
// Accepts an object with the eight named fields or an array of eight ints in
// canonical order. Throws InvalidScore on shape or type problems.
DimensionScores scores_from_json(const nlohmann::json& value);

}  // namespace consultrl::reward
