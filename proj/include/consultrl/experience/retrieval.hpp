#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "consultrl/agents/retrieved_context.hpp"
#include "consultrl/experience/repository.hpp"

namespace consultrl::experience {

// alpha, top_n and top_k default to 0.5, 30 and 2. The novelty, dispersion
// and storage thresholds are tuning choices; every run logs them.
struct RetrievalConfig {
  double alpha = 0.5;
  std::size_t top_n = 30;
  std::size_t top_k = 2;
  double tau_novelty = 0.98;
  double beta_std = 0.5;
  double tau_reward = 0.7;

  void validate() const;  // ConfigError
};

struct Candidate {
  ExperienceTuple tuple;
  double similarity = 0.0;      // cosine(query, state embedding)
  double combined_score = 0.0;  // similarity + alpha * reward
  std::optional<double> rerank_score;
};

// cosine(query, exp.embedding) + alpha * exp.reward. Throws DimensionMismatch.
double combined_score(std::span<const float> query_embedding, const ExperienceTuple& exp,
                      double alpha);

// Stage I: the top_n tuples by combined score, descending, ties by ascending id.
std::vector<Candidate> stage1_candidates(const ExperienceRepository& repo,
                                         std::span<const float> query_embedding,
                                         const RetrievalConfig& cfg);
std::vector<Candidate> stage1_candidates(const ExperienceRepository& repo,
                                         std::string_view query_text, const RetrievalConfig& cfg);

// Stage II: stable sort by rerank_score(query, state_text), descending. The
// scores are kept on the candidates. Throws RerankError.
std::vector<Candidate> stage2_rerank(const Reranker& reranker, std::string_view query_text,
                                     std::vector<Candidate> candidates);

// mean + beta_std * population standard deviation. Throws EmptyCandidates.
double dynamic_threshold(std::span<const double> rewards, double beta_std);

// Stage III: keeps candidates with similarity < tau_novelty and
// reward > dynamic threshold over the whole candidate set; order preserved.
std::vector<Candidate> stage3_filter(std::span<const float> query_embedding,
                                     const std::vector<Candidate>& candidates,
                                     const RetrievalConfig& cfg);

struct RetrievalTrace {
  std::vector<Candidate> stage1;
  std::vector<Candidate> stage2;
  std::vector<Candidate> stage3;
  std::optional<double> tau_dynamic;
};

// Stage I -> II -> III, truncated to top_k. An empty result is not an error.
std::vector<Candidate> retrieve_candidates(const ExperienceRepository& repo,
                                           const Reranker& reranker, std::string_view query_text,
                                           const RetrievalConfig& cfg,
                                           RetrievalTrace* trace = nullptr);

agents::RetrievedContext retrieve(const ExperienceRepository& repo, const Reranker& reranker,
                                  std::string_view query_text, const RetrievalConfig& cfg);

}  // namespace consultrl::experience
