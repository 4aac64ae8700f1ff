#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "consultrl/common/error.hpp"
#include "consultrl/grpo/grpo.hpp"
#include "generators.hpp"
#include "reference.hpp"
#include "temp_dir.hpp"

using namespace consultrl;
using namespace consultrl::grpo;

namespace {

GrpoGroup group(double chosen, std::vector<double> rejected) {
  GrpoGroup g{"prompt", {"best", chosen}, {}};
  for (std::size_t i = 0; i < rejected.size(); ++i) {
    g.rejected.push_back({"other " + std::to_string(i), rejected[i]});
  }
  return g;
}

GrpoGroup random_group(testkit::Gen& gen) {
  const auto n = static_cast<std::size_t>(gen.integer(1, 8));
  return group(gen.real(-1.0, 2.0), gen.rewards(n, -1.0, 2.0));
}

}  // namespace

TEST(GrpoLoss, WorkedExamples) {
  // log(1 + e^-1)
  EXPECT_NEAR(grpo_loss(group(1.0, {0.0})), 0.31326168751822283, 1e-15);
  // log(1 + e^-0.7 + e^-0.4)
  EXPECT_NEAR(grpo_loss(group(0.9, {0.2, 0.5})), 0.7733000436247918, 1e-15);
}

TEST(GrpoLoss, UniformRewardsGiveLogGroupSize) {
  for (std::size_t n = 1; n <= 16; ++n) {
    EXPECT_NEAR(grpo_loss(group(0.3, std::vector<double>(n, 0.3))), std::log(double(n + 1)), 1e-12);
  }
}

TEST(GrpoLoss, DominanceLimitStaysPositive) {
  const double loss = grpo_loss(group(50.0, {0.0}));
  EXPECT_GT(loss, 0.0);
  EXPECT_LT(loss, 1e-20);
  EXPECT_NEAR(loss, 1.9287498479639178e-22, 1e-35);
}

TEST(GrpoLoss, Errors) {
  EXPECT_THROW((void)grpo_loss(group(1.0, {})), EmptyGroup);
  EXPECT_THROW((void)grpo_loss(group(std::nan(""), {0.0})), std::invalid_argument);
}

TEST(GrpoProperties, MatchesDirectSoftmax) {
  testkit::Gen gen(401);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto g = random_group(gen);
    ASSERT_NEAR(grpo_loss(g), testkit::reference_grpo_loss(g), 1e-10);
  }
}

TEST(GrpoProperties, ShiftInvariant) {
  testkit::Gen gen(402);
  for (int trial = 0; trial < 1000; ++trial) {
    auto g = random_group(gen);
    const double c = gen.real(-5.0, 5.0);
    auto shifted = g;
    shifted.chosen.reward += c;
    for (auto& r : shifted.rejected) r.reward += c;
    ASSERT_NEAR(grpo_loss(g), grpo_loss(shifted), 1e-12);
  }
}

TEST(GrpoProperties, MonotoneInChosenReward) {
  testkit::Gen gen(403);
  for (int trial = 0; trial < 500; ++trial) {
    auto g = random_group(gen);
    const double before = grpo_loss(g);
    g.chosen.reward += gen.real(0.01, 1.0);
    ASSERT_LT(grpo_loss(g), before);
    ASSERT_GE(grpo_loss(g), 0.0);
  }
}

TEST(BuildGroup, PicksMaximumLowestIndexOnTies) {
  const std::vector<ScoredResponse> rollouts{{"a", 0.2}, {"b", 0.9}, {"c", 0.9}, {"d", -0.1}};
  const auto g = build_group("p", rollouts);
  EXPECT_EQ(g.chosen.text, "b");
  ASSERT_EQ(g.rejected.size(), 3u);
  EXPECT_EQ(g.rejected[0].text, "a");
  EXPECT_EQ(g.rejected[1].text, "c");
  EXPECT_EQ(g.rejected[2].text, "d");
  const std::vector<ScoredResponse> one{{"a", 1.0}};
  EXPECT_THROW((void)build_group("p", one), TooFewRollouts);
}

TEST(BuildGroup, ArgmaxSurvivesPositiveAffineMaps) {
  testkit::Gen gen(404);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ScoredResponse> rollouts;
    const int n = gen.integer(2, 8);
    for (int i = 0; i < n; ++i) rollouts.push_back({std::to_string(i), gen.integer(-4, 4) / 4.0});
    auto mapped = rollouts;
    const double a = gen.integer(1, 8) / 2.0;
    const double b = gen.integer(-8, 8) / 4.0;
    for (auto& r : mapped) r.reward = a * r.reward + b;
    ASSERT_EQ(build_group("p", rollouts).chosen.text, build_group("p", mapped).chosen.text);
    const auto g = build_group("p", rollouts);
    for (const auto& r : g.rejected) ASSERT_GE(g.chosen.reward, r.reward);
  }
}

TEST(GroupReward, OutcomePlusMeanTurn) {
  auto ep = dialogue::Episode("s").append_patient("cough");
  ep = ep.append_action({"r", dialogue::ActionKind::Inquiry, "How long?"}).append_turn_reward(0.5);
  ep = ep.append_patient("a week");
  ep = ep.append_action({"r", dialogue::ActionKind::Recommendation, "See a GP."}).append_turn_reward(-0.25);
  const auto closed = ep.close(dialogue::Termination::Recommended, 1.0);
  EXPECT_DOUBLE_EQ(episode_group_reward(closed, GroupRewardMode::OutcomePlusMeanTurn), 1.125);
  EXPECT_DOUBLE_EQ(episode_group_reward(closed, GroupRewardMode::OutcomeOnly), 1.0);
  const auto failed = ep.close(dialogue::Termination::Error, std::nullopt);
  EXPECT_DOUBLE_EQ(episode_group_reward(failed, GroupRewardMode::OutcomeOnly), 0.0);
  EXPECT_EQ(group_reward_mode_from_string("outcome_only"), GroupRewardMode::OutcomeOnly);
}

TEST(Export, RoundTripsThreeGroups) {
  testkit::TempDir dir("grpo_export");
  const std::vector<GrpoGroup> groups{group(1.0, {0.0}), group(0.5, {0.2, 0.1}),
                                      group(2.0, {-1.0, 0.0, 1.0})};
  const auto path = dir.path() / "groups.jsonl";
  EXPECT_EQ(export_training_records(groups, path), 3u);
  std::ifstream in(path);
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 3u);
  EXPECT_EQ(read_training_records(path), groups);
}

TEST(Export, EmptyInputWritesEmptyFile) {
  testkit::TempDir dir("grpo_empty");
  const auto path = dir.path() / "groups.jsonl";
  EXPECT_EQ(export_training_records({}, path), 0u);
  EXPECT_TRUE(std::filesystem::exists(path));
  EXPECT_EQ(std::filesystem::file_size(path), 0u);
  EXPECT_TRUE(read_training_records(path).empty());
}

TEST(Export, UnicodeIsByteStable) {
  testkit::TempDir dir("grpo_unicode");
  GrpoGroup g{"Patient: J'ai mal à la tête depuis 3 jours 🤕",
              {"Doctor: 头痛多久了？", 1.0},
              {{"Doctor: Ça va passer.", 0.0}}};
  const auto a = dir.path() / "a.jsonl";
  const auto b = dir.path() / "b.jsonl";
  export_training_records(std::vector<GrpoGroup>{g}, a);
  export_training_records(read_training_records(a), b);
  std::ifstream ia(a, std::ios::binary), ib(b, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(ia)), {});
  const std::string sb((std::istreambuf_iterator<char>(ib)), {});
  EXPECT_EQ(sa, sb);
  EXPECT_NE(sa.find("头痛"), std::string::npos);
  EXPECT_EQ(read_training_records(a).front(), g);
}
