#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "consultrl/common/error.hpp"
#include "consultrl/dialogue/episode.hpp"
#include "generators.hpp"

using namespace consultrl;
using namespace consultrl::dialogue;

namespace {

DoctorAction inquiry(std::string q) { return {"thinking", ActionKind::Inquiry, std::move(q)}; }
DoctorAction recommendation(std::string r) {
  return {"enough info", ActionKind::Recommendation, std::move(r)};
}

Episode with_inquiries(int n) {
  Episode ep("s");
  ep = ep.append_patient("I feel unwell.");
  for (int i = 0; i < n; ++i) {
    ep = ep.append_action(inquiry("Question " + std::to_string(i) + "?"));
    ep = ep.append_patient("Answer " + std::to_string(i));
  }
  return ep;
}

}  // namespace

TEST(AppendTurn, PatientOpensEmptyEpisode) {
  const Episode empty("s");
  const auto ep = empty.append_turn(Turn{0, Role::Patient, "hello"});
  EXPECT_EQ(ep.turns().size(), 1u);
  EXPECT_TRUE(empty.turns().empty());
}

TEST(AppendTurn, SecondPatientTurnViolatesRoleOrder) {
  const auto ep = Episode("s").append_patient("hello");
  EXPECT_THROW((void)ep.append_turn(Turn{1, Role::Patient, "again"}), RoleOrderViolation);
}

TEST(AppendTurn, IndexGapCheckedBeforeRole) {
  const auto ep = Episode("s").append_patient("hello").append_action(inquiry("Since when?"));
  EXPECT_THROW((void)ep.append_turn(Turn{1, Role::Doctor, "x"}, inquiry("x")), IndexGap);
  EXPECT_THROW((void)ep.append_turn(Turn{3, Role::Patient, "x"}), IndexGap);
}

TEST(AppendTurn, DoctorOpeningRejected) {
  EXPECT_THROW((void)Episode("s").append_turn(Turn{0, Role::Doctor, "hi"}, inquiry("hi")),
               RoleOrderViolation);
}

TEST(AppendTurn, DoctorTurnNeedsMatchingAction) {
  const auto ep = Episode("s").append_patient("hello");
  EXPECT_THROW((void)ep.append_turn(Turn{1, Role::Doctor, "Since when?"}), MissingAction);
  EXPECT_THROW((void)ep.append_turn(Turn{1, Role::Doctor, "Since when?"}, inquiry("Other?")),
               InvalidEpisode);
}

TEST(AppendTurn, NothingAfterRecommendation) {
  auto ep = Episode("s").append_patient("hello").append_action(recommendation("Rest."));
  ep = ep.append_patient("Thanks");
  EXPECT_THROW((void)ep.append_action(inquiry("More?")), InvalidEpisode);
}

TEST(AppendTurn, ClosedEpisodeRejectsEverything) {
  auto ep = Episode("s").append_patient("hello").append_action(recommendation("Rest."));
  ep = ep.append_turn_reward(0.5).close(Termination::Recommended, 1.0);
  EXPECT_THROW((void)ep.append_patient("x"), EpisodeClosed);
  EXPECT_THROW((void)ep.append_turn_reward(0.1), EpisodeClosed);
  EXPECT_THROW((void)ep.close(Termination::Error, std::nullopt), EpisodeClosed);
}

TEST(IsTerminal, FinalRecommendation) {
  const auto ep = with_inquiries(2).append_action(recommendation("See a GP."));
  EXPECT_EQ(is_terminal(ep, EpisodeConfig{}), TerminalStatus::Recommended);
}

TEST(IsTerminal, TenInquiriesHitTheCap) {
  EXPECT_EQ(is_terminal(with_inquiries(10), EpisodeConfig{}), TerminalStatus::MaxTurns);
}

TEST(IsTerminal, ThreeInquiriesContinue) {
  EXPECT_EQ(is_terminal(with_inquiries(3), EpisodeConfig{}), TerminalStatus::Continue);
}

TEST(IsTerminal, Idempotent) {
  const auto ep = with_inquiries(4);
  const EpisodeConfig cfg{4, 0.0};
  EXPECT_EQ(is_terminal(ep, cfg), is_terminal(ep, cfg));
  EXPECT_EQ(is_terminal(ep, cfg), TerminalStatus::MaxTurns);
}

TEST(TurnRewards, RangeAndCount) {
  auto ep = Episode("s").append_patient("hello");
  EXPECT_THROW((void)ep.append_turn_reward(1.5), InvalidEpisode);
  // One slot for an unparsed attempt.
  ep = ep.append_turn_reward(-1.0);
  EXPECT_THROW((void)ep.append_turn_reward(-1.0), InvalidEpisode);
  EXPECT_THROW((void)ep.close(Termination::MaxTurns, 0.0), InvalidEpisode);
  EXPECT_NO_THROW((void)ep.close(Termination::Error, std::nullopt));
}

TEST(Close, OutcomeMustBeDiscrete) {
  const auto ep = Episode("s").append_patient("hello").append_action(recommendation("Rest."));
  EXPECT_THROW((void)ep.close(Termination::Recommended, 0.75), InvalidEpisode);
  EXPECT_THROW((void)with_inquiries(1).close(Termination::Recommended, 1.0), InvalidEpisode);
  EXPECT_EQ(ep.close(Termination::Recommended, 0.5).outcome_reward(), 0.5);
}

TEST(EpisodeJson, RoundTripsThroughCheckedMutators) {
  auto ep = with_inquiries(2).append_turn_reward(0.25).append_turn_reward(-0.75);
  ep = ep.append_action(recommendation("Book a visit.")).append_turn_reward(1.0);
  ep = ep.close(Termination::Recommended, 0.5);
  const auto j = to_json(ep);
  EXPECT_EQ(j.dump(),
            to_json(episode_from_json(nlohmann::json::parse(j.dump()))).dump());
  EXPECT_EQ(episode_from_json(nlohmann::json::parse(j.dump())), ep);
  EXPECT_EQ(j["termination"], "recommended");
  EXPECT_EQ(j["turns"][1]["role"], "doctor");
  EXPECT_EQ(j["actions"][2]["kind"], "recommendation");
}

TEST(EpisodeJson, MalformedRecordsRaise) {
  auto j = nlohmann::json::parse(to_json(with_inquiries(1)).dump());
  j["turns"][1]["role"] = "patient";
  EXPECT_THROW((void)episode_from_json(j), RoleOrderViolation);
  auto k = nlohmann::json::parse(to_json(with_inquiries(1)).dump());
  k.erase("actions");
  EXPECT_THROW((void)episode_from_json(k), InvalidEpisode);
}

TEST(Scenarios, LoadFixtureAndRejectDuplicates) {
  const auto scenarios = load_scenarios(std::string(CONSULTRL_FIXTURES) + "/scenarios.jsonl");
  ASSERT_EQ(scenarios.size(), 5u);
  EXPECT_EQ(scenarios[0].id, "sc-001");
  EXPECT_TRUE(scenarios[0].metadata.count("condition"));

  const auto path = std::filesystem::temp_directory_path() / "consultrl_dup_scenarios.jsonl";
  {
    std::ofstream out(path);
    const auto line = to_json(scenarios[0]).dump();
    out << line << '\n' << line << '\n';
  }
  EXPECT_THROW((void)load_scenarios(path.string()), InvalidEpisode);
  std::filesystem::remove(path);
}

// Property: each observation is a strict prefix of the next one, and a
// recommended episode never has a doctor turn after the recommendation.
TEST(EpisodeProperties, MonotoneHistory) {
  testkit::Gen gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    Episode ep("p");
    ep = ep.append_patient(gen.words(1, 6));
    auto prev = ep.observation();
    const EpisodeConfig cfg{gen.integer(1, 10), 0.0};
    while (is_terminal(ep, cfg) == TerminalStatus::Continue) {
      auto a = gen.action();
      ep = ep.append_action(a);
      auto obs = ep.observation();
      ASSERT_EQ(obs.turns.size(), prev.turns.size() + 1);
      ASSERT_TRUE(std::equal(prev.turns.begin(), prev.turns.end(), obs.turns.begin()));
      prev = obs;
      if (a.kind == ActionKind::Inquiry && is_terminal(ep, cfg) == TerminalStatus::Continue) {
        ep = ep.append_patient(gen.words(1, 6));
        obs = ep.observation();
        ASSERT_EQ(obs.turns.size(), prev.turns.size() + 1);
        prev = obs;
      }
    }
    if (is_terminal(ep, cfg) == TerminalStatus::Recommended) {
      ep = ep.close(Termination::Recommended, 1.0);
      const auto actions = ep.actions();
      for (std::size_t i = 0; i + 1 < actions.size(); ++i) {
        ASSERT_EQ(actions[i].kind, ActionKind::Inquiry);
      }
      ASSERT_EQ(ep.turns().back().role, Role::Doctor);
    }
  }
}
