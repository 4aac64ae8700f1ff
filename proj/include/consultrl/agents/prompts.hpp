#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "consultrl/agents/chat.hpp"
#include "consultrl/agents/retrieved_context.hpp"
#include "consultrl/dialogue/episode.hpp"

namespace consultrl::agents {

// Prompt texts are compiled in from assets/prompts/*.<version>.txt.
std::string_view prompt_version() noexcept;
std::string_view policy_prompt() noexcept;
std::string_view patient_prompt() noexcept;
std::string_view evaluator_prompt() noexcept;
std::string_view evaluator_output_instructions() noexcept;
std::string_view outcome_judge_prompt() noexcept;
std::string_view adherence_judge_prompt() noexcept;

// Section markers shared by prompt builders and anything that inspects them.
namespace markers {
inline constexpr std::string_view kExperiencesBegin = "[Retrieved Experiences]";
inline constexpr std::string_view kExperiencesEnd = "[End Retrieved Experiences]";
inline constexpr std::string_view kDialogueHistory = "[Dialogue History]";
inline constexpr std::string_view kBeginData = "[BEGIN DATA]";
inline constexpr std::string_view kEndData = "[END DATA]";
inline constexpr std::string_view kConversationHistory = "[Conversation History]";
inline constexpr std::string_view kGroundTruth = "[Ground Truth Doctor Reply]";
inline constexpr std::string_view kFullResponse = "[AI Medical Assistant Full Response]";
inline constexpr std::string_view kFinalRecommendation = "[Final Recommendation]";
inline constexpr std::string_view kPatientTranscript = "[Patient Transcript]";
inline constexpr std::string_view kPersona = "[Your Persona]";
inline constexpr std::string_view kCondition = "[Your Condition]";
}  // namespace markers

// "Patient: ..." / "Doctor: ..." lines in turn order.
std::string render_history(const dialogue::Observation& obs);
std::string render_experience_block(const RetrievedContext& ctx);

// System message is the policy prompt; one user message carries the
// experience block (if any) followed by the dialogue history.
// Throws EmptyObservation when there is no patient turn yet.
std::vector<ChatMessage> build_doctor_prompt(const dialogue::Observation& obs,
                                             const RetrievedContext& ctx);

// System message: patient prompt + persona + private condition notes taken
// from metadata["condition"]. The expert ground truth is never included.
// Doctor turns become user messages, patient turns assistant messages.
std::vector<ChatMessage> build_patient_prompt(const dialogue::PatientScenario& scenario,
                                              const dialogue::Observation& obs);

std::vector<ChatMessage> build_turn_judge_prompt(const dialogue::Observation& obs,
                                                 std::string_view ground_truth,
                                                 std::string_view response);

std::vector<ChatMessage> build_outcome_judge_prompt(std::string_view final_recommendation,
                                                    std::string_view ground_truth);

std::vector<ChatMessage> build_adherence_judge_prompt(const dialogue::Observation& obs);

}  // namespace consultrl::agents
