#include "consultrl/experience/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "consultrl/common/error.hpp"

namespace consultrl::experience {

void RetrievalConfig::validate() const {
  if (top_n == 0) throw ConfigError("retrieval.top_n must be positive");
  if (top_k == 0) throw ConfigError("retrieval.top_k must be positive");
  if (top_k > top_n) throw ConfigError("retrieval.top_k must not exceed retrieval.top_n");
  if (!(tau_novelty >= 0.0 && tau_novelty <= 1.0)) {
    throw ConfigError("retrieval.tau_novelty must lie in [0, 1]");
  }
  for (double v : {alpha, beta_std, tau_reward}) {
    if (!std::isfinite(v)) throw ConfigError("retrieval constants must be finite");
  }
}

double combined_score(std::span<const float> query_embedding, const ExperienceTuple& exp,
                      double alpha) {
  return cosine(query_embedding, exp.embedding) + alpha * exp.reward;
}

std::vector<Candidate> stage1_candidates(const ExperienceRepository& repo,
                                         std::span<const float> query_embedding,
                                         const RetrievalConfig& cfg) {
  std::vector<Candidate> out;
  repo.read([&](std::span<const ExperienceTuple> tuples) {
    struct Scored {
      double score;
      double similarity;
      std::size_t index;
    };
    std::vector<Scored> scored;
    scored.reserve(tuples.size());
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      const double sim = cosine(query_embedding, tuples[i].embedding);
      scored.push_back({sim + cfg.alpha * tuples[i].reward, sim, i});
    }
    // Tuples are held in ascending id order, so the index breaks ties by id.
    const auto better = [](const Scored& a, const Scored& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.index < b.index;
    };
    const std::size_t n = std::min(cfg.top_n, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n),
                      scored.end(), better);
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& s = scored[k];
      out.push_back(Candidate{tuples[s.index], s.similarity, s.score, std::nullopt});
    }
  });
  return out;
}

std::vector<Candidate> stage1_candidates(const ExperienceRepository& repo,
                                         std::string_view query_text,
                                         const RetrievalConfig& cfg) {
  const Embedding query = repo.embedder().embed(query_text);
  return stage1_candidates(repo, query, cfg);
}

std::vector<Candidate> stage2_rerank(const Reranker& reranker, std::string_view query_text,
                                     std::vector<Candidate> candidates) {
  std::vector<std::string_view> texts;
  texts.reserve(candidates.size());
  for (const auto& c : candidates) texts.emplace_back(c.tuple.state_text);
  const auto scores = reranker.rerank_scores(query_text, texts);
  if (scores.size() != candidates.size()) throw RerankError("reranker returned wrong score count");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!std::isfinite(scores[i])) throw RerankError("reranker produced a non-finite score");
    candidates[i].rerank_score = scores[i];
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return *a.rerank_score > *b.rerank_score;
  });
  return candidates;
}

double dynamic_threshold(std::span<const double> rewards, double beta_std) {
  if (rewards.empty()) throw EmptyCandidates("dynamic threshold of an empty candidate set");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  return mean + beta_std * std::sqrt(ss / n);
}

std::vector<Candidate> stage3_filter(std::span<const float> query_embedding,
                                     const std::vector<Candidate>& candidates,
                                     const RetrievalConfig& cfg) {
  if (candidates.empty()) return {};
  std::vector<double> rewards;
  rewards.reserve(candidates.size());
  for (const auto& c : candidates) rewards.push_back(c.tuple.reward);
  const double tau_dynamic = dynamic_threshold(rewards, cfg.beta_std);

  std::vector<Candidate> out;
  for (const auto& c : candidates) {
    const double sim = cosine(query_embedding, c.tuple.embedding);
    if (sim < cfg.tau_novelty && c.tuple.reward > tau_dynamic) out.push_back(c);
  }
  return out;
}

std::vector<Candidate> retrieve_candidates(const ExperienceRepository& repo,
                                           const Reranker& reranker, std::string_view query_text,
                                           const RetrievalConfig& cfg, RetrievalTrace* trace) {
  const Embedding query = repo.embedder().embed(query_text);
  auto s1 = stage1_candidates(repo, query, cfg);
  if (s1.empty()) {
    if (trace) *trace = RetrievalTrace{};
    return {};
  }
  auto s2 = stage2_rerank(reranker, query_text, s1);
  auto s3 = stage3_filter(query, s2, cfg);
  if (trace) {
    std::vector<double> rewards;
    for (const auto& c : s2) rewards.push_back(c.tuple.reward);
    trace->tau_dynamic = dynamic_threshold(rewards, cfg.beta_std);
    trace->stage1 = std::move(s1);
    trace->stage2 = s2;
    trace->stage3 = s3;
  }
  if (s3.size() > cfg.top_k) s3.resize(cfg.top_k);
  return s3;
}

agents::RetrievedContext retrieve(const ExperienceRepository& repo, const Reranker& reranker,
                                  std::string_view query_text, const RetrievalConfig& cfg) {
  agents::RetrievedContext ctx;
  for (auto& c : retrieve_candidates(repo, reranker, query_text, cfg)) {
    ctx.experiences.push_back({std::move(c.tuple.state_text), std::move(c.tuple.action_text),
                               c.tuple.reward});
  }
  return ctx;
}

}  // namespace consultrl::experience
