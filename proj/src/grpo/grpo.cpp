#include "consultrl/grpo/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "consultrl/common/error.hpp"
#include "consultrl/common/jsonl.hpp"

namespace consultrl::grpo {

using nlohmann::json;
using nlohmann::ordered_json;

double grpo_loss(const GrpoGroup& group) {
  if (group.rejected.empty()) throw EmptyGroup("group has no rejected responses");
  const double rc = group.chosen.reward;
  double max_reward = rc;
  for (const auto& r : group.rejected) {
    if (!std::isfinite(r.reward)) throw std::invalid_argument("non-finite reward in group");
    max_reward = std::max(max_reward, r.reward);
  }
  if (!std::isfinite(rc)) throw std::invalid_argument("non-finite reward in group");

  if (max_reward == rc) {
    double tail = 0.0;
    for (const auto& r : group.rejected) tail += std::exp(r.reward - rc);
    return std::log1p(tail);
  }
  double sum = std::exp(rc - max_reward);
  for (const auto& r : group.rejected) sum += std::exp(r.reward - max_reward);
  return (max_reward - rc) + std::log(sum);
}

double mean_grpo_loss(std::span<const GrpoGroup> groups) {
  if (groups.empty()) return 0.0;
  double total = 0.0;
  for (const auto& g : groups) total += grpo_loss(g);
  return total / static_cast<double>(groups.size());
}

GrpoGroup build_group(std::string prompt, std::span<const ScoredResponse> rollouts) {
  if (rollouts.size() < 2) {
    throw TooFewRollouts("a group needs at least 2 rollouts, got " +
                         std::to_string(rollouts.size()));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < rollouts.size(); ++i) {
    if (rollouts[i].reward > rollouts[best].reward) best = i;
  }
  GrpoGroup group;
  group.prompt = std::move(prompt);
  group.chosen = rollouts[best];
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    if (i != best) group.rejected.push_back(rollouts[i]);
  }
  return group;
}

GroupRewardMode group_reward_mode_from_string(std::string_view name) {
  if (name == "outcome_plus_mean_turn") return GroupRewardMode::OutcomePlusMeanTurn;
  if (name == "outcome_only") return GroupRewardMode::OutcomeOnly;
  throw ConfigError("unknown group reward mode '" + std::string(name) + "'");
}

std::string_view to_string(GroupRewardMode mode) noexcept {
  return mode == GroupRewardMode::OutcomeOnly ? "outcome_only" : "outcome_plus_mean_turn";
}

double episode_group_reward(const dialogue::Episode& episode, GroupRewardMode mode) {
  const double outcome = episode.outcome_reward().value_or(0.0);
  if (mode == GroupRewardMode::OutcomeOnly) return outcome;
  const auto rewards = episode.turn_rewards();
  if (rewards.empty()) return outcome;
  const double mean =
      std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
  return outcome + mean;
}

ordered_json to_json(const GrpoGroup& group) {
  ordered_json rejected = ordered_json::array();
  ordered_json rewards = ordered_json::array();
  rewards.push_back(group.chosen.reward);
  for (const auto& r : group.rejected) {
    rejected.push_back(r.text);
    rewards.push_back(r.reward);
  }
  ordered_json out;
  out["prompt"] = group.prompt;
  out["chosen"] = group.chosen.text;
  out["rejected"] = std::move(rejected);
  out["rewards"] = std::move(rewards);
  out["loss"] = grpo_loss(group);
  return out;
}

GrpoGroup group_from_json(const json& record) {
  try {
    GrpoGroup g;
    g.prompt = record.at("prompt").get<std::string>();
    const auto& rejected = record.at("rejected");
    const auto& rewards = record.at("rewards");
    if (rewards.size() != rejected.size() + 1) {
      throw IoError("training record: rewards must hold chosen + one per rejected");
    }
    g.chosen = {record.at("chosen").get<std::string>(), rewards.at(0).get<double>()};
    for (std::size_t i = 0; i < rejected.size(); ++i) {
      g.rejected.push_back({rejected.at(i).get<std::string>(), rewards.at(i + 1).get<double>()});
    }
    return g;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed training record: ") + e.what());
  }
}

std::size_t export_training_records(std::span<const GrpoGroup> groups,
                                    const std::filesystem::path& path) {
  std::vector<ordered_json> records;
  records.reserve(groups.size());
  for (const auto& g : groups) records.push_back(to_json(g));
  jsonl::write_file(path, records);
  return records.size();
}

std::vector<GrpoGroup> read_training_records(const std::filesystem::path& path) {
  std::vector<GrpoGroup> out;
  for (const auto& r : jsonl::read_file(path)) out.push_back(group_from_json(r));
  return out;
}

}  // namespace consultrl::grpo
