#include "consultrl/agents/prompts.hpp"

#include "consultrl/common/error.hpp"
#include "consultrl/common/text.hpp"
#include "consultrl/generated/prompt_assets.inc"

namespace consultrl::agents {

using dialogue::Observation;
using dialogue::Role;

std::string_view prompt_version() noexcept { return assets::kPromptVersion; }
std::string_view policy_prompt() noexcept { return assets::kPolicy; }
std::string_view patient_prompt() noexcept { return assets::kPatient; }
std::string_view evaluator_prompt() noexcept { return assets::kEvaluator; }
std::string_view evaluator_output_instructions() noexcept { return assets::kEvaluatorOutput; }
std::string_view outcome_judge_prompt() noexcept { return assets::kOutcomeJudge; }
std::string_view adherence_judge_prompt() noexcept { return assets::kAdherenceJudge; }

std::string render_history(const Observation& obs) {
  std::string out;
  for (const auto& turn : obs.turns) {
    if (!out.empty()) out += '\n';
    out += turn.role == Role::Patient ? "Patient: " : "Doctor: ";
    out += turn.content;
  }
  return out;
}

std::string render_experience_block(const RetrievedContext& ctx) {
  if (ctx.empty()) return {};
  std::string out(markers::kExperiencesBegin);
  std::size_t n = 0;
  for (const auto& e : ctx.experiences) {
    out += "\nExperience " + std::to_string(++n) + " (reward " + text::fixed(e.reward, 4) + "):\n";
    out += "State:\n" + e.state_text + "\n";
    out += "Action:\n" + e.action_text + "\n";
  }
  out += markers::kExperiencesEnd;
  return out;
}

std::vector<ChatMessage> build_doctor_prompt(const Observation& obs, const RetrievedContext& ctx) {
  if (!obs.has_patient_turn()) throw EmptyObservation("doctor prompt needs a patient turn");
  std::string user;
  if (!ctx.empty()) {
    user = render_experience_block(ctx);
    user += "\n\n";
  }
  user += markers::kDialogueHistory;
  user += '\n';
  user += render_history(obs);
  return {{ChatRole::System, std::string(policy_prompt())}, {ChatRole::User, std::move(user)}};
}

std::vector<ChatMessage> build_patient_prompt(const dialogue::PatientScenario& scenario,
                                              const Observation& obs) {
  std::string system(patient_prompt());
  system += "\n\n";
  system += markers::kPersona;
  system += '\n';
  system += scenario.persona;
  if (auto it = scenario.metadata.find("condition"); it != scenario.metadata.end()) {
    system += "\n\n";
    system += markers::kCondition;
    system += " (private: never state it outright; reveal details only when asked)\n";
    system += it->second;
  }
  std::vector<ChatMessage> messages{{ChatRole::System, std::move(system)}};
  for (const auto& turn : obs.turns) {
    messages.push_back(
        {turn.role == Role::Doctor ? ChatRole::User : ChatRole::Assistant, turn.content});
  }
  return messages;
}

std::vector<ChatMessage> build_turn_judge_prompt(const Observation& obs,
                                                 std::string_view ground_truth,
                                                 std::string_view response) {
  std::string user;
  user += markers::kBeginData;
  user += "\n\n";
  user += markers::kConversationHistory;
  user += '\n' + render_history(obs) + "\n\n";
  user += markers::kGroundTruth;
  user += " (for reference)\n";
  user += ground_truth;
  user += "\n\n";
  user += markers::kFullResponse;
  user += " (to be evaluated)\n";
  user += response;
  user += "\n\n";
  user += markers::kEndData;
  user += "\n\n";
  user += evaluator_output_instructions();
  return {{ChatRole::System, std::string(evaluator_prompt())}, {ChatRole::User, std::move(user)}};
}

std::vector<ChatMessage> build_outcome_judge_prompt(std::string_view final_recommendation,
                                                    std::string_view ground_truth) {
  std::string user;
  user += markers::kGroundTruth;
  user += '\n';
  user += ground_truth;
  user += "\n\n";
  user += markers::kFinalRecommendation;
  user += '\n';
  user += final_recommendation;
  return {{ChatRole::System, std::string(outcome_judge_prompt())},
          {ChatRole::User, std::move(user)}};
}

std::vector<ChatMessage> build_adherence_judge_prompt(const Observation& obs) {
  std::string user(markers::kPatientTranscript);
  user += '\n';
  user += render_history(obs);
  return {{ChatRole::System, std::string(adherence_judge_prompt())},
          {ChatRole::User, std::move(user)}};
}

}  // namespace consultrl::agents
