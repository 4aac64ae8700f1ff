#pragma once

#include <cstdint>
#include <memory>
#include <string_view>

#include "consultrl/agents/chat.hpp"
#include "consultrl/agents/mock_backend.hpp"
#include "consultrl/experience/embedding.hpp"
#include "consultrl/orchestrator/config.hpp"

namespace consultrl::orchestrator {

// A mock script whose JSON omits "fallback" falls back to `profile`.
std::unique_ptr<agents::ChatBackend> make_chat_backend(const ChatBackendSpec& spec,
                                                       agents::MockProfile profile,
                                                       std::uint64_t seed);

std::shared_ptr<const experience::Embedder> make_embedder(const EmbedderSpec& spec);
std::unique_ptr<experience::Reranker> make_reranker(const RerankerSpec& spec);

}  // namespace consultrl::orchestrator
