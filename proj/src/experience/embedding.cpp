#include "consultrl/experience/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "consultrl/common/error.hpp"
#include "consultrl/common/hash.hpp"
#include "consultrl/common/text.hpp"

namespace consultrl::experience {

using nlohmann::json;

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine of vectors with dimensions " + std::to_string(a.size()) +
                            " and " + std::to_string(b.size()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

HashingEmbedder::HashingEmbedder(std::size_t dimension, std::size_t ngram)
    : dimension_(dimension), ngram_(ngram) {
  if (dimension_ == 0) throw EmbeddingError("embedding dimension must be positive");
  if (ngram_ == 0) throw EmbeddingError("n-gram length must be positive");
}

Embedding HashingEmbedder::embed(std::string_view text) const {
  std::vector<double> acc(dimension_, 0.0);
  const std::string padded = " " + text::to_lower(text) + " ";
  if (padded.size() >= ngram_) {
    for (std::size_t i = 0; i + ngram_ <= padded.size(); ++i) {
      const std::uint64_t h = fnv1a64(std::string_view(padded).substr(i, ngram_));
      const double sign = (h >> 63) ? -1.0 : 1.0;
      acc[h % dimension_] += sign;
    }
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  Embedding out(dimension_, 0.0f);
  if (norm > 0.0) {
    for (std::size_t i = 0; i < dimension_; ++i) out[i] = static_cast<float>(acc[i] / norm);
  }
  return out;
}

// ---------------------------------------------------------------------------

HttpEmbedder::HttpEmbedder(const std::string& endpoint_url, std::string model,
                           std::size_t dimension, agents::HttpPolicy policy)
    : transport_(endpoint_url, std::move(policy)), model_(std::move(model)), dimension_(dimension) {
  if (dimension_ == 0) throw EmbeddingError("embedding dimension must be positive");
}

Embedding HttpEmbedder::embed(std::string_view text) const {
  json response;
  try {
    response = transport_.post("/embeddings", {{"model", model_}, {"input", std::string(text)}});
  } catch (const Error& e) {
    throw EmbeddingError(std::string("embedding request failed: ") + e.what());
  }
  try {
    const auto& values = response.at("data").at(0).at("embedding");
    Embedding out;
    out.reserve(values.size());
    for (const auto& v : values) out.push_back(v.get<float>());
    if (out.size() != dimension_) {
      throw EmbeddingError("endpoint returned dimension " + std::to_string(out.size()) +
                           ", expected " + std::to_string(dimension_));
    }
    return out;
  } catch (const json::exception& e) {
    throw EmbeddingError(std::string("malformed embedding response: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

std::vector<double> Reranker::rerank_scores(std::string_view query,
                                            std::span<const std::string_view> candidates) const {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (auto c : candidates) {
    const double s = rerank_score(query, c);
    if (!std::isfinite(s)) throw RerankError("reranker produced a non-finite score");
    out.push_back(s);
  }
  return out;
}

namespace {
std::set<std::string> word_tokens(std::string_view s) {
  std::set<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.insert(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(std::move(cur));
  return out;
}
}  // namespace

double TokenOverlapReranker::rerank_score(std::string_view query,
                                          std::string_view candidate) const {
  const auto q = word_tokens(query);
  const auto c = word_tokens(candidate);
  if (q.empty() || c.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : q) common += c.count(t);
  return static_cast<double>(common) /
         std::sqrt(static_cast<double>(q.size()) * static_cast<double>(c.size()));
}

HttpReranker::HttpReranker(const std::string& endpoint_url, std::string model,
                           agents::HttpPolicy policy)
    : transport_(endpoint_url, std::move(policy)), model_(std::move(model)) {}

double HttpReranker::rerank_score(std::string_view query, std::string_view candidate) const {
  const std::string_view one[] = {candidate};
  return rerank_scores(query, one).front();
}

std::vector<double> HttpReranker::rerank_scores(
    std::string_view query, std::span<const std::string_view> candidates) const {
  if (candidates.empty()) return {};
  json docs = json::array();
  for (auto c : candidates) docs.push_back(std::string(c));
  json response;
  try {
    response = transport_.post(
        "/rerank", {{"model", model_}, {"query", std::string(query)}, {"documents", docs}});
  } catch (const Error& e) {
    throw RerankError(std::string("rerank request failed: ") + e.what());
  }
  std::vector<double> scores(candidates.size(), 0.0);
  std::vector<bool> seen(candidates.size(), false);
  try {
    for (const auto& r : response.at("results")) {
      const auto idx = r.at("index").get<std::size_t>();
      if (idx >= scores.size()) throw RerankError("rerank result index out of range");
      scores[idx] = r.at("relevance_score").get<double>();
      seen[idx] = true;
    }
  } catch (const json::exception& e) {
    throw RerankError(std::string("malformed rerank response: ") + e.what());
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!seen[i]) throw RerankError("rerank response omitted document " + std::to_string(i));
    if (!std::isfinite(scores[i])) throw RerankError("reranker produced a non-finite score");
  }
  return scores;
}

}  // namespace consultrl::experience
