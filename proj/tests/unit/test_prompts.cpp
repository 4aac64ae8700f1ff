#include <gtest/gtest.h>

#include "consultrl/agents/prompts.hpp"
#include "consultrl/common/error.hpp"

using namespace consultrl;
using namespace consultrl::agents;
using dialogue::ActionKind;
using dialogue::Episode;
using dialogue::Observation;

namespace {

Observation one_patient_turn() { return Episode("s").append_patient("I have a cough.").observation(); }

dialogue::PatientScenario scenario() {
  return {"s1", "A retired carpenter who speaks slowly.", "It is bronchitis; rest and fluids.",
          {{"condition", "Productive cough for 10 days."}}};
}

}  // namespace

TEST(Prompts, AssetsAreCompiledIn) {
  EXPECT_EQ(prompt_version(), "v1");
  for (auto p : {policy_prompt(), patient_prompt(), evaluator_prompt(),
                 evaluator_output_instructions(), outcome_judge_prompt(), adherence_judge_prompt()}) {
    EXPECT_GT(p.size(), 100u);
    EXPECT_NE(p.back(), '\n');
  }
  EXPECT_NE(policy_prompt().find("<think>"), std::string_view::npos);
  EXPECT_NE(policy_prompt().find("Recommendation:"), std::string_view::npos);
}

TEST(DoctorPrompt, MinimalCase) {
  const auto msgs = build_doctor_prompt(one_patient_turn(), RetrievedContext{});
  ASSERT_EQ(msgs.size(), 2u);
  EXPECT_EQ(msgs[0].role, ChatRole::System);
  EXPECT_EQ(msgs[0].content, policy_prompt());
  EXPECT_EQ(msgs[1].role, ChatRole::User);
  EXPECT_EQ(msgs[1].content, "[Dialogue History]\nPatient: I have a cough.");
}

TEST(DoctorPrompt, ExperiencesInRetrievalOrder) {
  RetrievedContext ctx{{{"Patient: chest pain", "Question: When did it start?", 0.9},
                        {"Patient: headache", "Recommendation: Rest.", 0.75}}};
  const auto msgs = build_doctor_prompt(one_patient_turn(), ctx);
  const auto& u = msgs[1].content;
  const auto first = u.find("Experience 1 (reward 0.9000):\nState:\nPatient: chest pain\nAction:\n"
                            "Question: When did it start?");
  const auto second = u.find("Experience 2 (reward 0.7500):\nState:\nPatient: headache\nAction:\n"
                             "Recommendation: Rest.");
  ASSERT_NE(first, std::string::npos);
  ASSERT_NE(second, std::string::npos);
  EXPECT_LT(first, second);
  EXPECT_LT(second, u.find("[Dialogue History]"));
}

TEST(DoctorPrompt, EmptyObservation) {
  EXPECT_THROW((void)build_doctor_prompt(Observation{}, RetrievedContext{}), EmptyObservation);
}

TEST(DoctorPrompt, PureFunction) {
  RetrievedContext ctx{{{"a", "b", 0.8}}};
  const auto a = build_doctor_prompt(one_patient_turn(), ctx);
  const auto b = build_doctor_prompt(one_patient_turn(), ctx);
  EXPECT_EQ(a, b);
}

TEST(PatientPrompt, FreshScenarioIsSystemOnly) {
  const auto msgs = build_patient_prompt(scenario(), Observation{});
  ASSERT_EQ(msgs.size(), 1u);
  EXPECT_EQ(msgs[0].role, ChatRole::System);
  EXPECT_NE(msgs[0].content.find("A retired carpenter who speaks slowly."), std::string::npos);
  EXPECT_NE(msgs[0].content.find("Productive cough for 10 days."), std::string::npos);
  EXPECT_EQ(msgs[0].content.find("bronchitis"), std::string::npos);
}

TEST(PatientPrompt, DoctorQuestionBecomesUserMessage) {
  const auto obs = Episode("s")
                       .append_patient("I have a cough.")
                       .append_action({"r", ActionKind::Inquiry, "Any fever?"})
                       .observation();
  const auto msgs = build_patient_prompt(scenario(), obs);
  ASSERT_EQ(msgs.size(), 3u);
  EXPECT_EQ(msgs[1].role, ChatRole::Assistant);
  EXPECT_EQ(msgs.back().role, ChatRole::User);
  EXPECT_EQ(msgs.back().content, "Any fever?");
}

TEST(JudgePrompt, SectionOrder) {
  const auto msgs = build_turn_judge_prompt(one_patient_turn(), "GT reply", "<think>x</think>");
  ASSERT_EQ(msgs.size(), 2u);
  EXPECT_EQ(msgs[0].content, evaluator_prompt());
  const auto& u = msgs[1].content;
  const std::size_t pos[] = {u.find("[BEGIN DATA]"), u.find("[Conversation History]"),
                             u.find("[Ground Truth Doctor Reply]"),
                             u.find("[AI Medical Assistant Full Response]"), u.find("[END DATA]")};
  for (std::size_t i = 0; i < std::size(pos); ++i) ASSERT_NE(pos[i], std::string::npos) << i;
  for (std::size_t i = 1; i < std::size(pos); ++i) EXPECT_LT(pos[i - 1], pos[i]);
  EXPECT_LT(pos[4], u.find(evaluator_output_instructions()));
  EXPECT_NE(u.find("GT reply"), std::string::npos);
}
