#include "consultrl/agents/mock_backend.hpp"

#include <array>
#include <fstream>

#include <fmt/format.h>

#include "consultrl/agents/prompts.hpp"
#include "consultrl/common/error.hpp"
#include "consultrl/common/hash.hpp"

namespace consultrl::agents {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 8> kDoctorQuestions = {
    "When did these symptoms first start, and have they changed since?",
    "Do you have a fever, chills or night sweats?",
    "Are you currently taking any medications or supplements?",
    "Have you noticed anything that makes the symptoms better or worse?",
    "Do you have any long-term medical conditions or past surgeries?",
    "Has anyone in your family had similar problems?",
    "How is this affecting your sleep, appetite or daily activities?",
    "Have you had any recent travel, injuries or changes in routine?",
};

constexpr std::array<std::string_view, 6> kPatientOpenings = {
    "Hello doctor, I haven't been feeling well lately and I'm a bit worried.",
    "Hi doctor. Something has been bothering me for a while and I thought I should get it checked.",
    "Good morning. I'm not sure where to start, but I've been having some health problems.",
    "Doctor, I've been feeling off for some days now and it isn't getting better.",
    "Hello. My family told me I should come in because I haven't been myself.",
    "Hi. I've had some symptoms that worry me, and I wanted a professional opinion.",
};

constexpr std::array<std::string_view, 8> kPatientReplies = {
    "Hmm, I think it started about a week ago, maybe a little longer.",
    "Not really, no. At least I haven't noticed anything like that.",
    "Yes, a little. It comes and goes, mostly in the evenings.",
    "I'm not sure... I don't really keep track of those things.",
    "Only some vitamins. Nothing prescribed, I think.",
    "It's been hard to sleep, honestly. I keep waking up.",
    "Well, it gets a bit worse when I move around a lot.",
    "No one in my family that I know of. Should I be worried?",
};

std::string doctor_fallback(std::uint64_t h) {
  return fmt::format(
      "<think>The information so far is not sufficient for a diagnosis; I should ask a targeted "
      "follow-up.</think>\n<answer>Question: {}</answer>",
      kDoctorQuestions[h % kDoctorQuestions.size()]);
}

std::string patient_fallback(const std::vector<ChatMessage>& messages, std::uint64_t h) {
  if (messages.size() == 1) return std::string(kPatientOpenings[h % kPatientOpenings.size()]);
  return std::string(kPatientReplies[h % kPatientReplies.size()]);
}

std::string judge_fallback(const std::vector<ChatMessage>& messages, std::uint64_t h) {
  const std::string& system = messages.front().content;
  if (system == outcome_judge_prompt()) {
    constexpr std::array<std::string_view, 3> kVerdicts = {"0.0", "0.5", "1.0"};
    return fmt::format("The recommendation was compared with the ground truth.\n{{\"verdict\": {}}}",
                       kVerdicts[h % kVerdicts.size()]);
  }
  if (system == adherence_judge_prompt()) {
    return "The patient stayed in character throughout.\n{\"adherence_score\": 8}";
  }
  // One byte of hash per dimension: mostly 1..5, occasionally -1 so the veto
  // branches are reachable in offline runs.
  std::array<int, 8> s{};
  for (std::size_t i = 0; i < s.size(); ++i) {
    const unsigned byte = static_cast<unsigned>((h >> (8 * i)) & 0xffU);
    s[i] = (byte % 16 == 0) ? -1 : 1 + static_cast<int>(byte % 5);
  }
  return fmt::format(
      "Analysis: each criterion was checked against the conversation and the reference reply.\n"
      "{{\"safety\": {}, \"reasoning\": {}, \"accuracy\": {}, \"completeness\": {}, "
      "\"info_gathering\": {}, \"faithfulness\": {}, \"empathy\": {}, \"humility\": {}}}",
      s[0], s[1], s[2], s[3], s[4], s[5], s[6], s[7]);
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

bool rule_matches(const MockRule& rule, const std::vector<ChatMessage>& messages,
                  std::uint64_t content_hash) {
  const std::string& last = messages.back().content;
  if (rule.content_hash && *rule.content_hash != content_hash) return false;
  if (rule.contains && last.find(*rule.contains) == std::string::npos) return false;
  if (rule.count_text &&
      count_occurrences(last, *rule.count_text) != static_cast<std::size_t>(rule.count_equals)) {
    return false;
  }
  return true;
}

}  // namespace

std::optional<MockProfile> mock_profile_from_string(std::string_view name) {
  if (name == "doctor") return MockProfile::Doctor;
  if (name == "patient") return MockProfile::Patient;
  if (name == "judge") return MockProfile::Judge;
  return std::nullopt;
}

MockScript mock_script_from_json(const json& doc) {
  MockScript script;
  try {
    if (auto it = doc.find("fallback"); it != doc.end()) {
      auto profile = mock_profile_from_string(it->get<std::string>());
      if (!profile) throw ConfigError("unknown mock fallback '" + it->get<std::string>() + "'");
      script.fallback = *profile;
    }
    if (auto it = doc.find("rules"); it != doc.end()) {
      for (const auto& r : *it) {
        MockRule rule;
        if (r.contains("hash")) {
          const auto& h = r["hash"];
          rule.content_hash = h.is_string() ? std::stoull(h.get<std::string>(), nullptr, 0)
                                            : h.get<std::uint64_t>();
        }
        if (r.contains("contains")) rule.contains = r["contains"].get<std::string>();
        if (r.contains("count")) {
          rule.count_text = r["count"].at("text").get<std::string>();
          rule.count_equals = r["count"].at("equals").get<int>();
        }
        if (r.contains("reply")) rule.replies.push_back(r["reply"].get<std::string>());
        if (r.contains("replies")) {
          for (const auto& s : r["replies"]) rule.replies.push_back(s.get<std::string>());
        }
        if (rule.replies.empty()) throw ConfigError("mock rule without reply");
        script.rules.push_back(std::move(rule));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed mock script: ") + e.what());
  } catch (const std::logic_error& e) {  // stoull
    throw ConfigError(std::string("malformed mock script hash: ") + e.what());
  }
  return script;
}

MockScript load_mock_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mock script " + path.string());
  auto doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw ConfigError("mock script is not valid JSON: " + path.string());
  return mock_script_from_json(doc);
}

MockChatBackend::MockChatBackend(MockScript script, std::uint64_t seed)
    : script_(std::move(script)), seed_(seed) {}

namespace {
std::uint64_t hash_contents(const std::vector<ChatMessage>& messages, std::uint64_t state) {
  for (const auto& m : messages) {
    state = fnv1a64(m.content, state);
    state = fnv1a64("\x1e", state);
  }
  return state;
}
}  // namespace

std::uint64_t MockChatBackend::content_hash(const std::vector<ChatMessage>& messages) {
  return hash_contents(messages, kFnvOffsetBasis);
}

std::uint64_t MockChatBackend::seeded_hash(const std::vector<ChatMessage>& messages,
                                           std::uint64_t seed) {
  return hash_contents(messages, fnv1a64_u64(seed));
}

std::string MockChatBackend::do_complete(const std::vector<ChatMessage>& messages,
                                         std::uint64_t seed) const {
  const std::uint64_t effective_seed = mix64(seed_ ^ mix64(seed));
  const std::uint64_t h = seeded_hash(messages, effective_seed);
  const std::uint64_t ch = content_hash(messages);
  for (const auto& rule : script_.rules) {
    if (rule_matches(rule, messages, ch)) return rule.replies[h % rule.replies.size()];
  }
  switch (script_.fallback) {
    case MockProfile::Doctor: return doctor_fallback(h);
    case MockProfile::Patient: return patient_fallback(messages, h);
    case MockProfile::Judge: return judge_fallback(messages, h);
  }
  return doctor_fallback(h);
}

}  // namespace consultrl::agents
