#include "consultrl/reward/reward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "consultrl/common/error.hpp"

namespace consultrl::reward {

using nlohmann::json;

double RewardConfig::weight_sum() const noexcept {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

void RewardConfig::validate() const {
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    if (!std::isfinite(weights[d]) || weights[d] < 0.0) {
      throw DegenerateWeights("weight for " + std::string(kDimensionNames[d]) +
                              " must be finite and >= 0");
    }
  }
  if (!(weight_sum() > 0.0)) throw DegenerateWeights("sum of weights must be positive");
  if (!(s_max > 0.0)) throw ConfigError("reward.s_max must be positive");
  if (!(r_min < r_max)) throw ConfigError("reward.r_min must be below reward.r_max");
  for (double v : {epsilon, r_crit, r_sev}) {
    if (!std::isfinite(v)) throw ConfigError("reward constants must be finite");
  }
}

std::string_view to_string(RewardBranch branch) noexcept {
  switch (branch) {
    case RewardBranch::CriticalVeto: return "critical_veto";
    case RewardBranch::SevereVeto: return "severe_veto";
    case RewardBranch::Weighted: return "weighted";
  }
  return "weighted";
}

std::string_view to_string(Correctness c) noexcept {
  switch (c) {
    case Correctness::Correct: return "correct";
    case Correctness::Partial: return "partial";
    case Correctness::Incorrect: return "incorrect";
  }
  return "incorrect";
}

void validate_scores(const DimensionScores& scores, const RewardConfig& cfg) {
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    if (std::abs(static_cast<double>(scores.values[d])) > cfg.s_max) {
      throw InvalidScore(std::string(kDimensionNames[d]) + " = " +
                         std::to_string(scores.values[d]) + " outside [-s_max, s_max]");
    }
  }
}

double normalized_weighted_sum(const DimensionScores& scores, const RewardConfig& cfg) {
  const double total_weight = cfg.weight_sum();
  if (!(total_weight > 0.0)) throw DegenerateWeights("sum of weights must be positive");
  double raw = 0.0;
  for (std::size_t d = 0; d < kDimensionCount; ++d) raw += cfg.weights[d] * scores.values[d];
  return raw / (cfg.s_max * total_weight);
}

ProcessReward evaluate_process_reward(const DimensionScores& scores, const RewardConfig& cfg) {
  validate_scores(scores, cfg);
  if (scores.safety() < cfg.epsilon) return {cfg.r_crit, RewardBranch::CriticalVeto};
  if (scores.reasoning() < cfg.epsilon || scores.accuracy() < cfg.epsilon) {
    return {cfg.r_sev, RewardBranch::SevereVeto};
  }
  const double value = std::clamp(normalized_weighted_sum(scores, cfg), cfg.r_min, cfg.r_max);
  return {value, RewardBranch::Weighted};
}

nlohmann::ordered_json to_json(const DimensionScores& scores) {
  nlohmann::ordered_json out;
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    out[std::string(kDimensionNames[d])] = scores.values[d];
  }
  return out;
}

DimensionScores scores_from_json(const json& value) {
  DimensionScores scores;
  const auto read = [](const json& v, std::string_view name) {
    if (!v.is_number_integer()) {
      throw InvalidScore("score '" + std::string(name) + "' must be an integer");
    }
    return v.get<int>();
  };
  if (value.is_array()) {
    if (value.size() != kDimensionCount) throw InvalidScore("score array must have 8 entries");
    for (std::size_t d = 0; d < kDimensionCount; ++d) {
      scores.values[d] = read(value[d], kDimensionNames[d]);
    }
    return scores;
  }
  if (!value.is_object()) throw InvalidScore("score vector must be an object or array");
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    const std::string name(kDimensionNames[d]);
    auto it = value.find(name);
    if (it == value.end()) throw InvalidScore("score vector missing '" + name + "'");
    scores.values[d] = read(*it, name);
  }
  return scores;
}

}  // namespace consultrl::reward
