#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "consultrl/agents/chat.hpp"
#include "consultrl/agents/response_parser.hpp"
#include "consultrl/dialogue/episode.hpp"
#include "consultrl/experience/retrieval.hpp"
#include "consultrl/grpo/grpo.hpp"
#include "consultrl/reward/reward.hpp"

namespace consultrl::orchestrator {

enum class BackendKind { Mock, Http };

struct ChatBackendSpec {
  BackendKind kind = BackendKind::Mock;
  std::optional<std::filesystem::path> script;  // mock only; empty script = templates
  agents::BackendConfig http;
};

struct EmbedderSpec {
  std::string kind = "hashing";  // hashing | http
  std::size_t dimension = 256;
  std::size_t ngram = 3;
  std::string endpoint;
  std::string model;
};

struct RerankerSpec {
  std::string kind = "token_overlap";  // token_overlap | http
  std::string endpoint;
  std::string model;
};

struct GroupSpec {
  int rollouts_per_scenario = 4;  // 1 disables group export
  grpo::GroupRewardMode reward_mode = grpo::GroupRewardMode::OutcomePlusMeanTurn;
};

struct QcSpec {
  bool enabled = true;
  std::optional<std::filesystem::path> rules;  // default persona-break rules when unset
  bool llm_judge = false;
  int llm_threshold = 7;
};

struct RunConfig {
  std::filesystem::path scenario_path;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  int parallelism = 1;
  // Scenarios per commit window. Rollouts inside one window all retrieve from
  // the store as it was when the window opened.
  int commit_window = 8;
  bool retrieval_enabled = true;

  dialogue::EpisodeConfig episode;
  reward::RewardConfig reward;
  experience::RetrievalConfig retrieval;
  agents::ParseMode parse_mode = agents::ParseMode::Strict;

  ChatBackendSpec doctor;
  ChatBackendSpec patient;
  ChatBackendSpec judge;
  EmbedderSpec embedder;
  RerankerSpec reranker;
  GroupSpec groups;
  QcSpec qc;

  // Range and consistency checks, plus existence of every referenced input
  // path. Throws ConfigError.
  void validate() const;
};

// "section.key=value"
struct Override {
  std::string key;
  std::string value;
};

// Parses "section.key=value". Throws ConfigError.
Override parse_override(std::string_view text);

// Reads an INI file. Relative paths inside the file resolve against the
// file's directory; overrides are applied afterwards and resolve against the
// working directory. Unknown sections or keys are rejected. Environment
// overrides for HTTP backends are applied last. Validates before returning.
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<Override>& overrides = {});

// Same, from INI text; relative paths resolve against `base_dir`.
RunConfig parse_run_config(const std::string& ini_text, const std::filesystem::path& base_dir,
                           const std::vector<Override>& overrides = {});

// Every effective setting, for the run report.
nlohmann::ordered_json to_json(const RunConfig& config);

}  // namespace consultrl::orchestrator
