#include "consultrl/experience/repository.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "consultrl/common/error.hpp"
#include "consultrl/common/jsonl.hpp"

namespace consultrl::experience {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Little-endian packing

void put_u32(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}
void put_u64(unsigned char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}
std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void pack_floats(std::string& out, std::span<const float> values) {
  for (float f : values) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &f, sizeof bits);
    unsigned char b[4];
    put_u32(b, bits);
    out.append(reinterpret_cast<const char*>(b), 4);
  }
}

float unpack_float(const unsigned char* p) {
  const std::uint32_t bits = get_u32(p);
  float f = 0.0f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

struct Header {
  std::uint32_t dimension = 0;
  std::uint64_t count = 0;
};

std::array<unsigned char, layout::kHeaderBytes> encode_header(const Header& h) {
  std::array<unsigned char, layout::kHeaderBytes> b{};
  put_u32(b.data(), layout::kMagic);
  put_u32(b.data() + 4, h.dimension);
  put_u64(b.data() + 8, h.count);
  return b;
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Header decode_header(const std::string& bytes, const fs::path& path) {
  if (bytes.size() < layout::kHeaderBytes) throw StorageError("truncated header in " + path.string());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (get_u32(p) != layout::kMagic) throw StorageError("bad magic in " + path.string());
  return Header{get_u32(p + 4), get_u64(p + 8)};
}

json log_record(const ExperienceTuple& t) {
  nlohmann::ordered_json r;
  r["id"] = t.id;
  r["state_text"] = t.state_text;
  r["action_text"] = t.action_text;
  r["reward"] = t.reward;
  return r;
}

// Committed view of a directory: tuples plus the byte length of the
// committed log prefix.
struct Loaded {
  Header header;
  std::vector<ExperienceTuple> tuples;
  std::size_t log_bytes = 0;
};

Loaded load_dir(const fs::path& dir) {
  const fs::path emb_path = dir / layout::kEmbeddingFile;
  const fs::path log_path = dir / layout::kLogFile;
  Loaded out;
  const std::string emb = read_all(emb_path);
  out.header = decode_header(emb, emb_path);
  const std::size_t dim = out.header.dimension;
  const std::uint64_t count = out.header.count;
  if (dim == 0) throw StorageError("zero dimension in " + emb_path.string());
  if (emb.size() < layout::kHeaderBytes + count * dim * 4) {
    throw StorageError(emb_path.string() + " holds fewer rows than its header count");
  }

  const std::string log = fs::exists(log_path) ? read_all(log_path) : std::string();
  std::size_t pos = 0;
  const auto* rows = reinterpret_cast<const unsigned char*>(emb.data()) + layout::kHeaderBytes;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t nl = log.find('\n', pos);
    if (nl == std::string::npos) {
      throw StorageError(log_path.string() + " holds fewer records than the header count");
    }
    ExperienceTuple t;
    try {
      const auto r = json::parse(std::string_view(log).substr(pos, nl - pos));
      t.id = r.at("id").get<std::uint64_t>();
      t.state_text = r.at("state_text").get<std::string>();
      t.action_text = r.at("action_text").get<std::string>();
      t.reward = r.at("reward").get<double>();
    } catch (const json::exception& e) {
      throw StorageError(log_path.string() + ": record " + std::to_string(i) + ": " + e.what());
    }
    if (!out.tuples.empty() && t.id <= out.tuples.back().id) {
      throw StorageError(log_path.string() + ": ids are not increasing");
    }
    t.embedding.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) t.embedding[k] = unpack_float(rows + (i * dim + k) * 4);
    out.tuples.push_back(std::move(t));
    pos = nl + 1;
  }
  out.log_bytes = pos;
  return out;
}

// RAII file descriptor.
class Fd {
 public:
  Fd() = default;
  Fd(const fs::path& path, int flags) : fd_(::open(path.c_str(), flags | O_CLOEXEC, 0644)) {
    if (fd_ < 0) throw StorageError("open " + path.string() + ": " + std::strerror(errno));
  }
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      if (fd_ >= 0) ::close(fd_);
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  int get() const noexcept { return fd_; }

 private:
  int fd_ = -1;
};

void pwrite_all(int fd, const void* data, std::size_t size, off_t offset, const char* what) {
  const auto* p = static_cast<const char*>(data);
  while (size > 0) {
    const ssize_t n = ::pwrite(fd, p, size, offset);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StorageError(std::string("write ") + what + ": " + std::strerror(errno));
    }
    p += n;
    size -= static_cast<std::size_t>(n);
    offset += n;
  }
}

void sync(int fd, const char* what) {
  if (::fsync(fd) != 0) throw StorageError(std::string("fsync ") + what + ": " + std::strerror(errno));
}

}  // namespace

// ---------------------------------------------------------------------------

class ExperienceRepository::Files {
 public:
  Files(const fs::path& dir, std::uint32_t dimension, std::uint64_t count, std::size_t log_bytes)
      : log_(dir / layout::kLogFile, O_RDWR | O_CREAT),
        emb_(dir / layout::kEmbeddingFile, O_RDWR | O_CREAT),
        dimension_(dimension),
        count_(count),
        log_bytes_(log_bytes) {
    // Drop any uncommitted tail left by an interrupted batch.
    if (::ftruncate(log_.get(), static_cast<off_t>(log_bytes_)) != 0 ||
        ::ftruncate(emb_.get(), static_cast<off_t>(row_offset(count_))) != 0) {
      throw StorageError(std::string("truncate: ") + std::strerror(errno));
    }
    write_header();
  }

  void commit(std::span<const ExperienceTuple> batch) {
    if (batch.empty()) return;
    std::string rows;
    std::string lines;
    for (const auto& t : batch) {
      pack_floats(rows, t.embedding);
      lines += jsonl::dump_line(log_record(t));
      lines += '\n';
    }
    pwrite_all(emb_.get(), rows.data(), rows.size(), static_cast<off_t>(row_offset(count_)),
               layout::kEmbeddingFile);
    sync(emb_.get(), layout::kEmbeddingFile);
    pwrite_all(log_.get(), lines.data(), lines.size(), static_cast<off_t>(log_bytes_),
               layout::kLogFile);
    sync(log_.get(), layout::kLogFile);
    const std::uint64_t new_count = count_ + batch.size();
    write_header(new_count);
    count_ = new_count;
    log_bytes_ += lines.size();
  }

 private:
  std::size_t row_offset(std::uint64_t row) const {
    return layout::kHeaderBytes + static_cast<std::size_t>(row) * dimension_ * 4;
  }

  void write_header() { write_header(count_); }
  void write_header(std::uint64_t count) {
    const auto bytes = encode_header(Header{dimension_, count});
    pwrite_all(emb_.get(), bytes.data(), bytes.size(), 0, layout::kEmbeddingFile);
    sync(emb_.get(), layout::kEmbeddingFile);
  }

  Fd log_;
  Fd emb_;
  std::uint32_t dimension_;
  std::uint64_t count_;
  std::size_t log_bytes_;
};

ExperienceRepository::ExperienceRepository(std::shared_ptr<const Embedder> embedder)
    : embedder_(std::move(embedder)) {
  if (!embedder_) throw EmbeddingError("repository needs an embedder");
}

ExperienceRepository::~ExperienceRepository() = default;

std::unique_ptr<ExperienceRepository> ExperienceRepository::open(
    const fs::path& dir, std::shared_ptr<const Embedder> embedder) {
  auto repo = std::make_unique<ExperienceRepository>(std::move(embedder));
  const auto dim = static_cast<std::uint32_t>(repo->dimension());
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StorageError("cannot create " + dir.string() + ": " + ec.message());

  std::uint64_t count = 0;
  std::size_t log_bytes = 0;
  if (fs::exists(dir / layout::kEmbeddingFile)) {
    Loaded loaded = load_dir(dir);
    if (loaded.header.dimension != dim) {
      throw StorageError("repository dimension " + std::to_string(loaded.header.dimension) +
                         " does not match embedder dimension " + std::to_string(dim));
    }
    count = loaded.header.count;
    log_bytes = loaded.log_bytes;
    repo->tuples_ = std::move(loaded.tuples);
    if (!repo->tuples_.empty()) repo->next_id_ = repo->tuples_.back().id + 1;
  }
  repo->dir_ = dir;
  repo->files_ = std::make_unique<Files>(dir, dim, count, log_bytes);
  return repo;
}

std::size_t ExperienceRepository::store_batch(std::span<const ExperienceDraft> batch,
                                              double tau_reward) {
  std::vector<ExperienceTuple> staged;
  for (const auto& draft : batch) {
    if (!std::isfinite(draft.reward)) throw StorageError("experience reward is not finite");
    if (draft.reward < tau_reward) continue;
    ExperienceTuple t;
    t.state_text = draft.state_text;
    t.action_text = draft.action_text;
    t.reward = draft.reward;
    t.embedding = embedder_->embed(draft.state_text);
    if (t.embedding.size() != dimension()) {
      throw EmbeddingError("embedder returned dimension " + std::to_string(t.embedding.size()));
    }
    staged.push_back(std::move(t));
  }
  if (staged.empty()) return 0;

  std::unique_lock lock(mutex_);
  std::uint64_t id = next_id_;
  for (auto& t : staged) t.id = id++;
  if (files_) files_->commit(staged);
  next_id_ = id;
  tuples_.insert(tuples_.end(), std::make_move_iterator(staged.begin()),
                 std::make_move_iterator(staged.end()));
  return staged.size();
}

void ExperienceRepository::read(
    const std::function<void(std::span<const ExperienceTuple>)>& fn) const {
  std::shared_lock lock(mutex_);
  fn(tuples_);
}

std::size_t ExperienceRepository::size() const {
  std::shared_lock lock(mutex_);
  return tuples_.size();
}

// ---------------------------------------------------------------------------

std::vector<ExperienceTuple> load_tuples(const fs::path& dir, std::size_t* dimension_out) {
  Loaded loaded = load_dir(dir);
  if (dimension_out) *dimension_out = loaded.header.dimension;
  return std::move(loaded.tuples);
}

StoreStats inspect_store(const fs::path& dir) {
  StoreStats stats;
  const auto tuples = load_tuples(dir, &stats.dimension);
  stats.count = tuples.size();
  if (tuples.empty()) return stats;
  stats.min_id = tuples.front().id;
  stats.max_id = tuples.back().id;
  stats.min_reward = tuples.front().reward;
  stats.max_reward = tuples.front().reward;
  double sum = 0.0;
  for (const auto& t : tuples) {
    stats.min_reward = std::min(stats.min_reward, t.reward);
    stats.max_reward = std::max(stats.max_reward, t.reward);
    sum += t.reward;
  }
  stats.mean_reward = sum / static_cast<double>(tuples.size());
  return stats;
}

CompactResult compact_store(const fs::path& dir, double min_reward) {
  std::size_t dim = 0;
  const auto tuples = load_tuples(dir, &dim);
  std::vector<ExperienceTuple> kept;
  for (const auto& t : tuples) {
    if (t.reward >= min_reward) kept.push_back(t);
  }

  // Build the replacement next to the original, then swap directories.
  fs::path staging = dir;
  staging += ".compact";
  fs::remove_all(staging);
  fs::create_directories(staging);
  {
    std::string lines;
    std::string rows;
    for (const auto& t : kept) {
      lines += jsonl::dump_line(log_record(t));
      lines += '\n';
      pack_floats(rows, t.embedding);
    }
    const auto header = encode_header(Header{static_cast<std::uint32_t>(dim), kept.size()});
    std::ofstream log(staging / layout::kLogFile, std::ios::binary);
    log << lines;
    std::ofstream emb(staging / layout::kEmbeddingFile, std::ios::binary);
    emb.write(reinterpret_cast<const char*>(header.data()), header.size());
    emb << rows;
    if (!log || !emb) throw StorageError("failed writing compacted store");
  }
  fs::path old = dir;
  old += ".old";
  fs::remove_all(old);
  fs::rename(dir, old);
  fs::rename(staging, dir);
  fs::remove_all(old);
  return {kept.size(), tuples.size() - kept.size()};
}

}  // namespace consultrl::experience
