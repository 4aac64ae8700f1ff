#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "consultrl/common/error.hpp"
#include "consultrl/common/jsonl.hpp"
#include "consultrl/common/text.hpp"
#include "consultrl/dialogue/episode.hpp"
#include "consultrl/evaluation/adherence.hpp"
#include "consultrl/evaluation/win_rate.hpp"
#include "consultrl/experience/repository.hpp"
#include "consultrl/experience/retrieval.hpp"
#include "consultrl/grpo/grpo.hpp"
#include "consultrl/orchestrator/config.hpp"
#include "consultrl/orchestrator/factory.hpp"
#include "consultrl/orchestrator/runner.hpp"
#include "consultrl/reward/reward.hpp"

namespace {

using namespace consultrl;
using nlohmann::json;
using nlohmann::ordered_json;

std::vector<orchestrator::Override> parse_overrides(const std::vector<std::string>& raw) {
  std::vector<orchestrator::Override> out;
  for (const auto& s : raw) out.push_back(orchestrator::parse_override(s));
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// A score vector line: JSON (object or array) or eight integers separated by
// spaces or commas.
reward::DimensionScores parse_score_line(std::string_view line) {
  const auto t = text::trim(line);
  if (!t.empty() && (t.front() == '{' || t.front() == '[')) {
    try {
      return reward::scores_from_json(json::parse(t));
    } catch (const json::parse_error& e) {
      throw InvalidScore(std::string("malformed score line: ") + e.what());
    }
  }
  std::string normalized(t);
  for (char& c : normalized) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(normalized);
  json arr = json::array();
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw InvalidScore("not an integer score: '" + tok + "'");
    arr.push_back(v);
  }
  return reward::scores_from_json(arr);
}

int cmd_rollout(const std::string& config_path, const std::vector<std::string>& sets,
                const std::optional<std::string>& output, const std::optional<std::uint64_t>& seed,
                const std::optional<int>& parallelism) {
  auto overrides = parse_overrides(sets);
  if (output) overrides.push_back({"run.output_dir", *output});
  if (seed) overrides.push_back({"run.seed", std::to_string(*seed)});
  if (parallelism) overrides.push_back({"run.parallelism", std::to_string(*parallelism)});
  const auto cfg = orchestrator::load_run_config(config_path, overrides);
  const auto summary = orchestrator::run_batch(cfg);
  std::cout << orchestrator::to_json(summary).dump(2) << '\n';
  return 0;
}

int cmd_store_inspect(const std::string& dir) {
  const auto s = experience::inspect_store(dir);
  ordered_json j;
  j["dimension"] = s.dimension;
  j["count"] = s.count;
  if (s.count > 0) {
    j["min_id"] = s.min_id;
    j["max_id"] = s.max_id;
    j["min_reward"] = s.min_reward;
    j["max_reward"] = s.max_reward;
    j["mean_reward"] = s.mean_reward;
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_store_compact(const std::string& dir, double min_reward) {
  const auto r = experience::compact_store(dir, min_reward);
  std::cout << ordered_json{{"kept", r.kept}, {"dropped", r.dropped}}.dump() << '\n';
  return 0;
}

struct RetrieveArgs {
  std::string store;
  std::string query;
  std::optional<std::string> config;
  std::vector<std::string> sets;
  std::size_t dimension = 256;
  std::size_t ngram = 3;
  std::optional<std::size_t> top_k;
};

int cmd_retrieve(const RetrieveArgs& a) {
  orchestrator::EmbedderSpec emb;
  orchestrator::RerankerSpec rr;
  experience::RetrievalConfig rc;
  if (a.config) {
    const auto cfg = orchestrator::load_run_config(*a.config, parse_overrides(a.sets));
    emb = cfg.embedder;
    rr = cfg.reranker;
    rc = cfg.retrieval;
  } else {
    emb.dimension = a.dimension;
    emb.ngram = a.ngram;
  }
  if (a.top_k) rc.top_k = *a.top_k;
  rc.validate();
  if (!std::filesystem::is_directory(a.store)) throw IoError("no store directory " + a.store);

  auto repo = experience::ExperienceRepository::open(a.store, orchestrator::make_embedder(emb));
  auto reranker = orchestrator::make_reranker(rr);
  for (const auto& c : experience::retrieve_candidates(*repo, *reranker, a.query, rc)) {
    ordered_json j;
    j["id"] = c.tuple.id;
    j["state_text"] = c.tuple.state_text;
    j["action_text"] = c.tuple.action_text;
    j["reward"] = c.tuple.reward;
    j["similarity"] = c.similarity;
    j["combined_score"] = c.combined_score;
    j["rerank_score"] = c.rerank_score ? ordered_json(*c.rerank_score) : ordered_json(nullptr);
    std::cout << jsonl::dump_line(j) << '\n';
  }
  return 0;
}

int cmd_reward_eval(const std::string& path, const std::optional<std::string>& config,
                    const std::vector<std::string>& sets, bool show_branch) {
  reward::RewardConfig rc;
  if (config) rc = orchestrator::load_run_config(*config, parse_overrides(sets)).reward;
  rc.validate();
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (text::trim(line).empty() || text::trim(line).front() == '#') continue;
    try {
      const auto r = reward::evaluate_process_reward(parse_score_line(line), rc);
      if (show_branch) {
        std::cout << fmt::format("{}\t{}\n", r.value, reward::to_string(r.branch));
      } else {
        std::cout << fmt::format("{}\n", r.value);
      }
    } catch (const Error& e) {
      throw InvalidScore(fmt::format("{}:{}: {}", path, line_no, e.what()));
    }
  }
  return 0;
}

// Records may be full training records or bare {"rewards": [chosen, rejected...]}.
int cmd_grpo_loss(const std::string& path, bool mean_only) {
  std::vector<grpo::GrpoGroup> groups;
  for (const auto& r : jsonl::read_file(path)) {
    if (r.contains("prompt")) {
      groups.push_back(grpo::group_from_json(r));
      continue;
    }
    const auto& rewards = r.at("rewards");
    if (!rewards.is_array() || rewards.empty()) throw IoError("rewards must be a non-empty array");
    grpo::GrpoGroup g;
    g.chosen.reward = rewards.at(0).get<double>();
    for (std::size_t i = 1; i < rewards.size(); ++i) g.rejected.push_back({"", rewards[i].get<double>()});
    groups.push_back(std::move(g));
  }
  if (!mean_only) {
    for (const auto& g : groups) std::cout << fmt::format("{}\n", grpo::grpo_loss(g));
  }
  if (mean_only) std::cout << fmt::format("{}\n", grpo::mean_grpo_loss(groups));
  return 0;
}

int cmd_winrate(const std::string& path, bool leaderboard) {
  const auto table = evaluation::aggregate_win_rates(evaluation::load_judgments(path));
  if (leaderboard) {
    std::cout << evaluation::render_leaderboard(table);
  } else {
    std::cout << evaluation::to_json(table).dump(2) << '\n';
  }
  return 0;
}

int cmd_qc(const std::string& path, const std::optional<std::string>& rules_path,
           const std::optional<std::string>& doctor_rules_path, bool fail_on_violation) {
  const evaluation::RuleSet patient(rules_path ? evaluation::load_rules(*rules_path)
                                               : evaluation::default_patient_rules());
  std::optional<evaluation::RuleSet> doctor;
  if (doctor_rules_path) doctor.emplace(evaluation::load_rules(*doctor_rules_path));

  std::size_t failed = 0;
  std::size_t n = 0;
  // Episode files list rollouts of a scenario in order, so a per-scenario
  // counter reproduces the ids used by `rollout`.
  std::map<std::string, std::size_t> seen;
  for (const auto& record : jsonl::read_file(path)) {
    const auto ep = dialogue::episode_from_json(record);
    const auto id = ep.scenario_id() + "#" + std::to_string(seen[ep.scenario_id()]++);
    ++n;
    const auto report = evaluation::adherence_filter(ep, id, patient, doctor ? &*doctor : nullptr);
    if (!report.passed) ++failed;
    std::cout << jsonl::dump_line(evaluation::to_json(report)) << '\n';
  }
  std::cerr << fmt::format("{} of {} episodes failed adherence QC\n", failed, n);
  return fail_on_violation && failed > 0 ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consultation RL toolkit: rollouts, experience store, rewards, GRPO, evaluation"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallelism;
  auto* rollout = app.add_subcommand("rollout", "Run a batch of simulated consultations");
  rollout->add_option("-c,--config", config_path, "INI run configuration")->required()->check(CLI::ExistingFile);
  rollout->add_option("--set", sets, "Override a config key (section.key=value)");
  rollout->add_option("-o,--output", output, "Override run.output_dir");
  rollout->add_option("--seed", seed, "Override run.seed");
  rollout->add_option("-j,--parallelism", parallelism, "Override run.parallelism");

  auto* store = app.add_subcommand("store", "Experience store maintenance");
  store->require_subcommand(1);
  std::string store_dir;
  auto* inspect = store->add_subcommand("inspect", "Print store statistics");
  inspect->add_option("dir", store_dir, "Store directory")->required()->check(CLI::ExistingDirectory);
  double min_reward = 0.0;
  auto* compact = store->add_subcommand("compact", "Drop tuples below a reward floor");
  compact->add_option("dir", store_dir, "Store directory")->required()->check(CLI::ExistingDirectory);
  compact->add_option("--min-reward", min_reward, "Keep tuples with reward >= this")->required();

  RetrieveArgs ra;
  auto* retrieve = app.add_subcommand("retrieve", "Query the experience store");
  retrieve->add_option("--store", ra.store, "Store directory")->required();
  retrieve->add_option("-q,--query", ra.query, "Query state text")->required();
  retrieve->add_option("-c,--config", ra.config, "Take embedder/reranker/retrieval settings from a run config")
      ->check(CLI::ExistingFile);
  retrieve->add_option("--set", ra.sets, "Override a config key (section.key=value)");
  retrieve->add_option("--dimension", ra.dimension, "Hashing embedder dimension (without --config)");
  retrieve->add_option("--ngram", ra.ngram, "Hashing embedder n-gram size (without --config)");
  retrieve->add_option("--top-k", ra.top_k, "Number of experiences to return");

  auto* reward_cmd = app.add_subcommand("reward", "Reward utilities");
  reward_cmd->require_subcommand(1);
  std::string scores_path;
  std::optional<std::string> reward_config;
  bool show_branch = false;
  auto* eval = reward_cmd->add_subcommand("eval", "Process reward for each score vector in a file");
  eval->add_option("file", scores_path, "One score vector per line")->required()->check(CLI::ExistingFile);
  eval->add_option("-c,--config", reward_config, "Take reward constants from a run config")
      ->check(CLI::ExistingFile);
  eval->add_option("--set", sets, "Override a config key (section.key=value)");
  eval->add_flag("--branch", show_branch, "Also print which branch produced the reward");

  std::string groups_path;
  bool mean_only = false;
  auto* loss = app.add_subcommand("grpo-loss", "GRPO loss for each group record");
  loss->add_option("file", groups_path, "JSONL group records")->required()->check(CLI::ExistingFile);
  loss->add_flag("--mean", mean_only, "Print only the mean loss");

  std::string judgments_path;
  bool leaderboard = false;
  auto* winrate = app.add_subcommand("winrate", "Aggregate pairwise judgments into win rates");
  winrate->add_option("file", judgments_path, "CSV or JSONL judgments")->required()->check(CLI::ExistingFile);
  winrate->add_flag("--leaderboard", leaderboard, "Plain-text leaderboard instead of JSON");

  std::string episodes_path;
  std::optional<std::string> rules_path;
  std::optional<std::string> doctor_rules_path;
  bool fail_on_violation = false;
  auto* qc = app.add_subcommand("qc", "Patient adherence QC over an episode file");
  qc->add_option("file", episodes_path, "Episodes JSONL")->required()->check(CLI::ExistingFile);
  qc->add_option("--rules", rules_path, "Patient rule file")->check(CLI::ExistingFile);
  qc->add_option("--doctor-rules", doctor_rules_path, "Optional doctor rule file")->check(CLI::ExistingFile);
  qc->add_flag("--fail-on-violation", fail_on_violation, "Exit 3 when any episode fails");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("consultrl"));
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (*rollout) return cmd_rollout(config_path, sets, output, seed, parallelism);
    if (*inspect) return cmd_store_inspect(store_dir);
    if (*compact) return cmd_store_compact(store_dir, min_reward);
    if (*retrieve) return cmd_retrieve(ra);
    if (*eval) return cmd_reward_eval(scores_path, reward_config, sets, show_branch);
    if (*loss) return cmd_grpo_loss(groups_path, mean_only);
    if (*winrate) return cmd_winrate(judgments_path, leaderboard);
    if (*qc) return cmd_qc(episodes_path, rules_path, doctor_rules_path, fail_on_violation);
  } catch (const consultrl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
