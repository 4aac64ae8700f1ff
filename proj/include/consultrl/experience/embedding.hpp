#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "consultrl/agents/http_transport.hpp"

namespace consultrl::experience {

using Embedding = std::vector<float>;

// Cosine similarity accumulated in double. A zero-norm operand yields 0, and
// the result is clamped to [-1, 1]. Throws DimensionMismatch.
double cosine(std::span<const float> a, std::span<const float> b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const noexcept = 0;
  // Deterministic for a fixed text. Throws EmbeddingError.
  virtual Embedding embed(std::string_view text) const = 0;
};

// Signed feature hashing of character n-grams of the lower-cased text,
// L2-normalized. Needs no model server; used by tests and offline runs.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension, std::size_t ngram = 3);

  std::size_t dimension() const noexcept override { return dimension_; }
  Embedding embed(std::string_view text) const override;

 private:
  std::size_t dimension_;
  std::size_t ngram_;
};

// OpenAI-compatible embeddings endpoint:
// POST {endpoint}/embeddings {"model", "input"} -> data[0].embedding
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(const std::string& endpoint_url, std::string model, std::size_t dimension,
               agents::HttpPolicy policy);

  std::size_t dimension() const noexcept override { return dimension_; }
  Embedding embed(std::string_view text) const override;

 private:
  agents::JsonHttpTransport transport_;
  std::string model_;
  std::size_t dimension_;
};

class Reranker {
 public:
  virtual ~Reranker() = default;
  virtual double rerank_score(std::string_view query, std::string_view candidate) const = 0;
  // Batch form; the default scores pair by pair.
  virtual std::vector<double> rerank_scores(std::string_view query,
                                            std::span<const std::string_view> candidates) const;
};

// Cosine over lower-cased word-token sets. A cheap local stand-in for a
// cross-encoder.
class TokenOverlapReranker final : public Reranker {
 public:
  double rerank_score(std::string_view query, std::string_view candidate) const override;
};

// Cross-encoder served behind a rerank endpoint:
// POST {endpoint}/rerank {"model", "query", "documents"}
//   -> results[{index, relevance_score}]
class HttpReranker final : public Reranker {
 public:
  HttpReranker(const std::string& endpoint_url, std::string model, agents::HttpPolicy policy);

  double rerank_score(std::string_view query, std::string_view candidate) const override;
  std::vector<double> rerank_scores(std::string_view query,
                                    std::span<const std::string_view> candidates) const override;

 private:
  agents::JsonHttpTransport transport_;
  std::string model_;
};

}  // namespace consultrl::experience
