#include <gtest/gtest.h>

#include <algorithm>

#include "consultrl/agents/mock_backend.hpp"
#include "consultrl/common/error.hpp"
#include "consultrl/reward/judge.hpp"
#include "consultrl/reward/reward.hpp"
#include "generators.hpp"

using namespace consultrl;
using namespace consultrl::reward;

namespace {

DimensionScores make(std::array<int, kDimensionCount> v) { return DimensionScores{v}; }

DimensionScores filled(int v) {
  DimensionScores s;
  s.values.fill(v);
  return s;
}

agents::MockChatBackend scripted(const std::string& reply) {
  agents::MockScript script;
  script.fallback = agents::MockProfile::Judge;
  script.rules.push_back(agents::MockRule{std::nullopt, std::nullopt, std::nullopt, 0, {reply}});
  return agents::MockChatBackend(script, 0);
}

dialogue::Observation small_observation() {
  const auto ep = dialogue::Episode("s").append_patient("My head hurts.");
  return ep.observation();
}

}  // namespace

TEST(ProcessReward, AllMaximumIsOne) {
  EXPECT_DOUBLE_EQ(process_reward(filled(5), RewardConfig{}), 1.0);
}

TEST(ProcessReward, SafetyVeto) {
  auto s = filled(5);
  s[Dimension::Safety] = -1;
  const auto r = evaluate_process_reward(s, RewardConfig{});
  EXPECT_EQ(r.value, -1.0);
  EXPECT_EQ(r.branch, RewardBranch::CriticalVeto);
}

TEST(ProcessReward, SevereVetoOnReasoning) {
  auto s = filled(5);
  s[Dimension::Safety] = 2;
  s[Dimension::Reasoning] = -2;
  const auto r = evaluate_process_reward(s, RewardConfig{});
  EXPECT_EQ(r.value, -0.75);
  EXPECT_EQ(r.branch, RewardBranch::SevereVeto);
}

TEST(ProcessReward, BothVetoesReturnCritical) {
  const auto s = make({-1, -1, -1, 5, 5, 5, 5, 5});
  EXPECT_EQ(process_reward(s, RewardConfig{}), -1.0);
}

TEST(ProcessReward, WorkedWeightedSum) {
  // 3 + 4 + 2 + 0.7 + 0 + 1.4 + 2.5 + 0.5 = 14.1, over 5 * 6.2 = 31.
  const auto s = make({3, 4, 2, 1, 0, 2, 5, 1});
  EXPECT_NEAR(process_reward(s, RewardConfig{}), 14.1 / 31.0, 1e-15);
  EXPECT_NEAR(process_reward(s, RewardConfig{}), 0.45483870967741935, 1e-15);
}

TEST(ProcessReward, ZeroIsNotAVeto) {
  const auto s = make({0, 0, 0, -5, -5, -5, -5, -5});
  const auto r = evaluate_process_reward(s, RewardConfig{});
  EXPECT_EQ(r.branch, RewardBranch::Weighted);
  EXPECT_NEAR(r.value, -16.0 / 31.0, 1e-15);
  EXPECT_EQ(process_reward(filled(0), RewardConfig{}), 0.0);
}

TEST(ProcessReward, RejectsOutOfRangeAndDegenerateConfig) {
  EXPECT_THROW((void)process_reward(make({6, 0, 0, 0, 0, 0, 0, 0}), RewardConfig{}), InvalidScore);
  RewardConfig zero;
  zero.weights.fill(0.0);
  EXPECT_THROW(zero.validate(), DegenerateWeights);
  RewardConfig negative;
  negative.weights[3] = -0.1;
  EXPECT_THROW(negative.validate(), DegenerateWeights);
  RewardConfig inverted;
  inverted.r_min = 1.0;
  inverted.r_max = -1.0;
  EXPECT_THROW(inverted.validate(), ConfigError);
}

TEST(ProcessReward, ClipsToConfiguredRange) {
  RewardConfig cfg;
  cfg.r_max = 0.5;
  EXPECT_EQ(process_reward(filled(5), cfg), 0.5);
}

TEST(OutcomeReward, DiscreteValues) {
  EXPECT_EQ(outcome_reward(Correctness::Correct), 1.0);
  EXPECT_EQ(outcome_reward(Correctness::Partial), 0.5);
  EXPECT_EQ(outcome_reward(Correctness::Incorrect), 0.0);
}

TEST(RewardProperties, MonotoneOffTheVetoRegion) {
  testkit::Gen gen(101);
  const RewardConfig cfg;
  for (int trial = 0; trial < 2000; ++trial) {
    auto s = gen.scores(0, 5);
    const auto d = gen.index(kDimensionCount);
    if (s.values[d] == 5) continue;
    const double before = process_reward(s, cfg);
    s.values[d] += 1;
    ASSERT_GE(process_reward(s, cfg), before);
  }
}

TEST(RewardProperties, SafetyVetoDominates) {
  testkit::Gen gen(102);
  const RewardConfig cfg;
  for (int trial = 0; trial < 2000; ++trial) {
    auto s = gen.scores();
    s[Dimension::Safety] = gen.integer(-5, -1);
    ASSERT_EQ(process_reward(s, cfg), cfg.r_crit);
  }
}

TEST(RewardProperties, AlwaysInRange) {
  testkit::Gen gen(103);
  RewardConfig cfg;
  cfg.r_min = -0.4;
  cfg.r_max = 0.3;
  for (int trial = 0; trial < 2000; ++trial) {
    cfg.r_crit = -0.4;
    cfg.r_sev = -0.2;
    const double r = process_reward(gen.scores(), cfg);
    ASSERT_GE(r, cfg.r_min);
    ASSERT_LE(r, cfg.r_max);
  }
}

TEST(RewardProperties, NegationNegatesNormalizedSum) {
  testkit::Gen gen(104);
  const RewardConfig cfg;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto s = gen.scores();
    auto neg = s;
    for (auto& v : neg.values) v = -v;
    ASSERT_NEAR(normalized_weighted_sum(neg, cfg), -normalized_weighted_sum(s, cfg), 1e-15);
  }
}

TEST(ScoresJson, ObjectAndArrayForms) {
  const auto s = make({3, 4, 2, 1, 0, 2, 5, 1});
  EXPECT_EQ(scores_from_json(to_json(s)), s);
  EXPECT_EQ(scores_from_json(nlohmann::json::parse("[3,4,2,1,0,2,5,1]")), s);
  EXPECT_THROW((void)scores_from_json(nlohmann::json::parse("[1,2,3]")), InvalidScore);
  EXPECT_THROW((void)scores_from_json(nlohmann::json::parse(R"({"safety": 1})")), InvalidScore);
}

TEST(JudgeTurn, AllZeroScoresGiveZeroReward) {
  const auto judge = scripted(
      R"(Looks fine. {"safety": 0, "reasoning": 0, "accuracy": 0, "completeness": 0,
      "info_gathering": 0, "faithfulness": 0, "empathy": 0, "humility": 0})");
  const auto scores =
      judge_turn(judge, small_observation(), "Ask about onset.", "<think>x</think>\nQuestion: When?");
  EXPECT_EQ(scores, filled(0));
  EXPECT_EQ(process_reward(scores, RewardConfig{}), 0.0);
}

TEST(JudgeTurn, MalformedReplyRaises) {
  const auto judge = scripted("I would rate this highly.");
  EXPECT_THROW((void)judge_turn(judge, small_observation(), "gt", "Question: When?"),
               JudgeFormatError);
}

TEST(JudgeOutcome, VerdictMapping) {
  EXPECT_EQ(judge_outcome(scripted(R"(Matches. {"verdict": "1.0"})"), "Migraine", "Migraine"),
            Correctness::Correct);
  EXPECT_EQ(parse_outcome_verdict(R"({"verdict": 0.5})"), Correctness::Partial);
  EXPECT_EQ(parse_outcome_verdict(R"({"verdict": 0})"), Correctness::Incorrect);
  EXPECT_THROW((void)judge_outcome(scripted(R"({"verdict": "0.75"})"), "x", "y"), JudgeFormatError);
  EXPECT_THROW((void)parse_outcome_verdict("no json here"), JudgeFormatError);
}
