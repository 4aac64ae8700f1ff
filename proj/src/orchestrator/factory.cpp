#include "consultrl/orchestrator/factory.hpp"

#include <fstream>

#include "consultrl/agents/http_backend.hpp"
#include "consultrl/common/error.hpp"

namespace consultrl::orchestrator {

std::unique_ptr<agents::ChatBackend> make_chat_backend(const ChatBackendSpec& spec,
                                                       agents::MockProfile profile,
                                                       std::uint64_t seed) {
  if (spec.kind == BackendKind::Http) return std::make_unique<agents::HttpChatBackend>(spec.http);

  agents::MockScript script;
  script.fallback = profile;
  if (spec.script) {
    std::ifstream in(*spec.script);
    if (!in) throw ConfigError("cannot open mock script " + spec.script->string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("mock script " + spec.script->string() + ": " + e.what());
    }
    if (doc.is_object() && !doc.contains("fallback")) {
      static constexpr const char* kNames[] = {"doctor", "patient", "judge"};
      doc["fallback"] = kNames[static_cast<int>(profile)];
    }
    script = agents::mock_script_from_json(doc);
  }
  return std::make_unique<agents::MockChatBackend>(std::move(script), seed);
}

namespace {
agents::HttpPolicy default_policy() { return agents::HttpPolicy{}; }
}  // namespace

std::shared_ptr<const experience::Embedder> make_embedder(const EmbedderSpec& spec) {
  if (spec.kind == "http") {
    return std::make_shared<experience::HttpEmbedder>(spec.endpoint, spec.model, spec.dimension,
                                                      default_policy());
  }
  return std::make_shared<experience::HashingEmbedder>(spec.dimension, spec.ngram);
}

std::unique_ptr<experience::Reranker> make_reranker(const RerankerSpec& spec) {
  if (spec.kind == "http") {
    return std::make_unique<experience::HttpReranker>(spec.endpoint, spec.model,
                                                      default_policy());
  }
  return std::make_unique<experience::TokenOverlapReranker>();
}

}  // namespace consultrl::orchestrator
