#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "consultrl/experience/embedding.hpp"

namespace consultrl::experience {

struct ExperienceTuple {
  std::uint64_t id = 0;
  std::string state_text;
  std::string action_text;
  double reward = 0.0;
  Embedding embedding;

  bool operator==(const ExperienceTuple&) const = default;
};

// A tuple before it has been embedded and assigned an id.
struct ExperienceDraft {
  std::string state_text;
  std::string action_text;
  double reward = 0.0;
};

// On-disk layout of a persisted repository directory:
//
//   experiences.jsonl  one {"id","state_text","action_text","reward"} per line
//   embeddings.bin     16-byte header, then `count` rows of `dimension`
//                      little-endian float32, row i aligned with line i
//
// Header (little-endian): u32 magic, u32 dimension, u64 count.
//
// A batch is committed by appending the rows, then the log lines, then
// rewriting the header count. Anything beyond the header count is an
// interrupted commit and is discarded on the next open.
namespace layout {
inline constexpr const char* kLogFile = "experiences.jsonl";
inline constexpr const char* kEmbeddingFile = "embeddings.bin";
inline constexpr std::uint32_t kMagic = 0x45504552;  // "REPE" read as LE bytes
inline constexpr std::size_t kHeaderBytes = 16;
}  // namespace layout

/// Reward-gated experience store with an exhaustive in-memory index.
///
/// Many readers, one writer: `store_batch` embeds outside the lock and then
/// commits under an exclusive lock; `read` hands out a consistent view under
/// a shared lock, so readers never observe half a batch.
class ExperienceRepository {
 public:
  // In-memory only.
  explicit ExperienceRepository(std::shared_ptr<const Embedder> embedder);

  // Opens (or creates) a persisted repository. The embedder's dimension must
  // match the stored one. Throws StorageError.
  static std::unique_ptr<ExperienceRepository> open(const std::filesystem::path& dir,
                                                    std::shared_ptr<const Embedder> embedder);

  ~ExperienceRepository();
  ExperienceRepository(const ExperienceRepository&) = delete;
  ExperienceRepository& operator=(const ExperienceRepository&) = delete;

  // Embeds and appends exactly the drafts with reward >= tau_reward, in input
  // order, with fresh ids. Returns how many were stored. Throws
  // EmbeddingError or StorageError; on error nothing from the batch is kept.
  std::size_t store_batch(std::span<const ExperienceDraft> batch, double tau_reward);

  // Runs `fn` over the committed tuples (ascending id) under a shared lock.
  void read(const std::function<void(std::span<const ExperienceTuple>)>& fn) const;

  std::size_t size() const;
  std::size_t dimension() const noexcept { return embedder_->dimension(); }
  const Embedder& embedder() const noexcept { return *embedder_; }
  const std::optional<std::filesystem::path>& directory() const noexcept { return dir_; }

 private:
  class Files;

  std::shared_ptr<const Embedder> embedder_;
  std::optional<std::filesystem::path> dir_;
  std::unique_ptr<Files> files_;
  mutable std::shared_mutex mutex_;
  std::vector<ExperienceTuple> tuples_;
  std::uint64_t next_id_ = 0;
};

// Facts about a persisted repository, read without an embedder.
struct StoreStats {
  std::size_t dimension = 0;
  std::size_t count = 0;
  std::uint64_t min_id = 0;
  std::uint64_t max_id = 0;
  double min_reward = 0.0;
  double max_reward = 0.0;
  double mean_reward = 0.0;
};

// Loads tuples and embeddings from a repository directory (committed part only).
std::vector<ExperienceTuple> load_tuples(const std::filesystem::path& dir,
                                         std::size_t* dimension_out = nullptr);
StoreStats inspect_store(const std::filesystem::path& dir);

struct CompactResult {
  std::size_t kept = 0;
  std::size_t dropped = 0;
};

// Rewrites the directory keeping tuples with reward >= min_reward, with their
// original ids, and without any uncommitted tail.
CompactResult compact_store(const std::filesystem::path& dir, double min_reward);

}  // namespace consultrl::experience
