#include "consultrl/orchestrator/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "consultrl/agents/http_backend.hpp"
#include "consultrl/common/error.hpp"
#include "consultrl/common/text.hpp"

namespace consultrl::orchestrator {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

int to_int(const std::string& key, std::string_view v) {
  int out = 0;
  const auto s = text::trim(v);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(key + ": expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, std::string_view v) {
  std::uint64_t out = 0;
  const auto s = text::trim(v);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(key + ": expected an unsigned integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::size_t to_size(const std::string& key, std::string_view v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_double(const std::string& key, std::string_view v) {
  double out = 0;
  const auto s = text::trim(v);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(key + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

bool to_bool(const std::string& key, std::string_view v) {
  const auto s = text::to_lower(text::trim(v));
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ConfigError(key + ": expected a boolean, got '" + std::string(v) + "'");
}

fs::path to_path(std::string_view v, const fs::path& base) {
  fs::path p{std::string(text::trim(v))};
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

BackendKind to_kind(const std::string& key, std::string_view v) {
  const auto s = text::to_lower(text::trim(v));
  if (s == "mock") return BackendKind::Mock;
  if (s == "http") return BackendKind::Http;
  throw ConfigError(key + ": backend kind must be mock or http");
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value,
                                  const fs::path& base)>;

void add_backend_keys(std::map<std::string, Setter>& t, const std::string& section,
                      ChatBackendSpec RunConfig::*member) {
  const auto s = section + ".";
  t[s + "kind"] = [member](RunConfig& c, auto& k, auto& v, auto&) { (c.*member).kind = to_kind(k, v); };
  t[s + "script"] = [member](RunConfig& c, auto&, auto& v, auto& b) {
    if (text::trim(v).empty()) {
      (c.*member).script.reset();
    } else {
      (c.*member).script = to_path(v, b);
    }
  };
  t[s + "endpoint"] = [member](RunConfig& c, auto&, auto& v, auto&) {
    (c.*member).http.endpoint_url = std::string(text::trim(v));
  };
  t[s + "model"] = [member](RunConfig& c, auto&, auto& v, auto&) {
    (c.*member).http.model_name = std::string(text::trim(v));
  };
  t[s + "temperature"] = [member](RunConfig& c, auto& k, auto& v, auto&) {
    (c.*member).http.temperature = to_double(k, v);
  };
  t[s + "max_tokens"] = [member](RunConfig& c, auto& k, auto& v, auto&) {
    (c.*member).http.max_tokens = to_int(k, v);
  };
  t[s + "timeout_ms"] = [member](RunConfig& c, auto& k, auto& v, auto&) {
    (c.*member).http.timeout_ms = to_int(k, v);
  };
  t[s + "retry_limit"] = [member](RunConfig& c, auto& k, auto& v, auto&) {
    (c.*member).http.retry_limit = to_int(k, v);
  };
  t[s + "retry_backoff_ms"] = [member](RunConfig& c, auto& k, auto& v, auto&) {
    (c.*member).http.retry_backoff_ms = to_int(k, v);
  };
  t[s + "max_connections"] = [member](RunConfig& c, auto& k, auto& v, auto&) {
    (c.*member).http.max_connections = to_int(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["run.scenarios"] = [](RunConfig& c, auto&, auto& v, auto& b) { c.scenario_path = to_path(v, b); };
    t["run.output_dir"] = [](RunConfig& c, auto&, auto& v, auto& b) { c.output_dir = to_path(v, b); };
    t["run.seed"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.seed = to_u64(k, v); };
    t["run.parallelism"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.parallelism = to_int(k, v); };
    t["run.commit_window"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.commit_window = to_int(k, v); };

    t["episode.max_turns"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.episode.max_turns = to_int(k, v); };
    t["episode.decode_temperature"] = [](RunConfig& c, auto& k, auto& v, auto&) {
      c.episode.decode_temperature = to_double(k, v);
    };

    t["reward.epsilon"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.reward.epsilon = to_double(k, v); };
    t["reward.r_crit"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.reward.r_crit = to_double(k, v); };
    t["reward.r_sev"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.reward.r_sev = to_double(k, v); };
    t["reward.s_max"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.reward.s_max = to_double(k, v); };
    t["reward.r_min"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.reward.r_min = to_double(k, v); };
    t["reward.r_max"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.reward.r_max = to_double(k, v); };
    for (std::size_t i = 0; i < reward::kDimensionCount; ++i) {
      t["reward.w_" + std::string(reward::kDimensionNames[i])] =
          [i](RunConfig& c, auto& k, auto& v, auto&) { c.reward.weights[i] = to_double(k, v); };
    }

    t["retrieval.enabled"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.retrieval_enabled = to_bool(k, v); };
    t["retrieval.alpha"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.retrieval.alpha = to_double(k, v); };
    t["retrieval.top_n"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.retrieval.top_n = to_size(k, v); };
    t["retrieval.top_k"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.retrieval.top_k = to_size(k, v); };
    t["retrieval.tau_novelty"] = [](RunConfig& c, auto& k, auto& v, auto&) {
      c.retrieval.tau_novelty = to_double(k, v);
    };
    t["retrieval.beta_std"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.retrieval.beta_std = to_double(k, v); };
    t["retrieval.tau_reward"] = [](RunConfig& c, auto& k, auto& v, auto&) {
      c.retrieval.tau_reward = to_double(k, v);
    };

    t["parse.mode"] = [](RunConfig& c, auto& k, auto& v, auto&) {
      const auto s = text::to_lower(text::trim(v));
      if (s == "strict") {
        c.parse_mode = agents::ParseMode::Strict;
      } else if (s == "lenient") {
        c.parse_mode = agents::ParseMode::Lenient;
      } else {
        throw ConfigError(k + ": expected strict or lenient");
      }
    };

    add_backend_keys(t, "doctor_backend", &RunConfig::doctor);
    add_backend_keys(t, "patient_backend", &RunConfig::patient);
    add_backend_keys(t, "judge_backend", &RunConfig::judge);

    t["embedder.kind"] = [](RunConfig& c, auto&, auto& v, auto&) { c.embedder.kind = text::to_lower(text::trim(v)); };
    t["embedder.dimension"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.embedder.dimension = to_size(k, v); };
    t["embedder.ngram"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.embedder.ngram = to_size(k, v); };
    t["embedder.endpoint"] = [](RunConfig& c, auto&, auto& v, auto&) { c.embedder.endpoint = std::string(text::trim(v)); };
    t["embedder.model"] = [](RunConfig& c, auto&, auto& v, auto&) { c.embedder.model = std::string(text::trim(v)); };

    t["reranker.kind"] = [](RunConfig& c, auto&, auto& v, auto&) { c.reranker.kind = text::to_lower(text::trim(v)); };
    t["reranker.endpoint"] = [](RunConfig& c, auto&, auto& v, auto&) { c.reranker.endpoint = std::string(text::trim(v)); };
    t["reranker.model"] = [](RunConfig& c, auto&, auto& v, auto&) { c.reranker.model = std::string(text::trim(v)); };

    t["grpo.rollouts_per_scenario"] = [](RunConfig& c, auto& k, auto& v, auto&) {
      c.groups.rollouts_per_scenario = to_int(k, v);
    };
    t["grpo.reward_mode"] = [](RunConfig& c, auto&, auto& v, auto&) {
      c.groups.reward_mode = grpo::group_reward_mode_from_string(text::trim(v));
    };

    t["qc.enabled"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.qc.enabled = to_bool(k, v); };
    t["qc.rules"] = [](RunConfig& c, auto&, auto& v, auto& b) {
      if (text::trim(v).empty()) {
        c.qc.rules.reset();
      } else {
        c.qc.rules = to_path(v, b);
      }
    };
    t["qc.llm_judge"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.qc.llm_judge = to_bool(k, v); };
    t["qc.llm_threshold"] = [](RunConfig& c, auto& k, auto& v, auto&) { c.qc.llm_threshold = to_int(k, v); };
    return t;
  }();
  return table;
}

void apply(RunConfig& cfg, const std::string& key, const std::string& value, const fs::path& base) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value, base);
}

void require_file(const fs::path& p, const std::string& what) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw ConfigError(what + " does not exist: " + p.string());
}

void validate_backend(const ChatBackendSpec& spec, const std::string& name) {
  if (spec.kind == BackendKind::Http) {
    if (spec.http.endpoint_url.empty()) throw ConfigError(name + ".endpoint is required for http");
    if (spec.http.model_name.empty()) throw ConfigError(name + ".model is required for http");
  } else if (spec.script) {
    require_file(*spec.script, name + ".script");
  }
  spec.http.validate();
}

}  // namespace

void RunConfig::validate() const {
  if (scenario_path.empty()) throw ConfigError("run.scenarios is required");
  require_file(scenario_path, "run.scenarios");
  if (output_dir.empty()) throw ConfigError("run.output_dir is required");
  if (parallelism <= 0) throw ConfigError("run.parallelism must be a positive integer");
  if (commit_window <= 0) throw ConfigError("run.commit_window must be a positive integer");
  episode.validate();
  reward.validate();
  retrieval.validate();
  validate_backend(doctor, "doctor_backend");
  validate_backend(patient, "patient_backend");
  validate_backend(judge, "judge_backend");
  if (embedder.kind != "hashing" && embedder.kind != "http") {
    throw ConfigError("embedder.kind must be hashing or http");
  }
  if (embedder.dimension == 0) throw ConfigError("embedder.dimension must be positive");
  if (embedder.ngram == 0) throw ConfigError("embedder.ngram must be positive");
  if (embedder.kind == "http" && embedder.endpoint.empty()) {
    throw ConfigError("embedder.endpoint is required for http");
  }
  if (reranker.kind != "token_overlap" && reranker.kind != "http") {
    throw ConfigError("reranker.kind must be token_overlap or http");
  }
  if (reranker.kind == "http" && reranker.endpoint.empty()) {
    throw ConfigError("reranker.endpoint is required for http");
  }
  if (groups.rollouts_per_scenario <= 0) {
    throw ConfigError("grpo.rollouts_per_scenario must be a positive integer");
  }
  if (qc.rules) require_file(*qc.rules, "qc.rules");
  if (qc.llm_threshold < 0 || qc.llm_threshold > 10) {
    throw ConfigError("qc.llm_threshold must lie in [0, 10]");
  }
}

Override parse_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(text) + "' is not section.key=value");
  }
  const auto key = text::trim(text.substr(0, eq));
  if (key.find('.') == std::string_view::npos) {
    throw ConfigError("override key '" + std::string(key) + "' lacks a section");
  }
  return {std::string(key), std::string(text.substr(eq + 1))};
}

RunConfig parse_run_config(const std::string& ini_text, const fs::path& base_dir,
                           const std::vector<Override>& overrides) {
  pt::ptree tree;
  try {
    std::istringstream in(ini_text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      apply(cfg, section + "." + key, node.get_value<std::string>(), base_dir);
    }
  }
  for (const auto& o : overrides) apply(cfg, o.key, o.value, {});
  agents::apply_env_overrides(cfg.doctor.http, "doctor");
  agents::apply_env_overrides(cfg.patient.http, "patient");
  agents::apply_env_overrides(cfg.judge.http, "judge");
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const fs::path& path, const std::vector<Override>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), fs::absolute(path).parent_path(), overrides);
}

namespace {
nlohmann::ordered_json backend_json(const ChatBackendSpec& s) {
  nlohmann::ordered_json j;
  j["kind"] = s.kind == BackendKind::Mock ? "mock" : "http";
  if (s.kind == BackendKind::Mock) {
    j["script"] = s.script ? nlohmann::ordered_json(s.script->filename().string()) : nlohmann::ordered_json(nullptr);
  } else {
    j["endpoint"] = s.http.endpoint_url;
    j["model"] = s.http.model_name;
    j["temperature"] = s.http.temperature;
    j["max_tokens"] = s.http.max_tokens;
    j["retry_limit"] = s.http.retry_limit;
  }
  return j;
}
}  // namespace

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["run"] = {{"seed", c.seed},
              {"parallelism", c.parallelism},
              {"commit_window", c.commit_window}};
  j["episode"] = {{"max_turns", c.episode.max_turns},
                  {"decode_temperature", c.episode.decode_temperature}};
  nlohmann::ordered_json weights;
  for (std::size_t i = 0; i < reward::kDimensionCount; ++i) {
    weights[std::string(reward::kDimensionNames[i])] = c.reward.weights[i];
  }
  j["reward"] = {{"epsilon", c.reward.epsilon}, {"r_crit", c.reward.r_crit},
                 {"r_sev", c.reward.r_sev},     {"s_max", c.reward.s_max},
                 {"r_min", c.reward.r_min},     {"r_max", c.reward.r_max},
                 {"weights", weights}};
  j["retrieval"] = {{"enabled", c.retrieval_enabled},
                    {"alpha", c.retrieval.alpha},
                    {"top_n", c.retrieval.top_n},
                    {"top_k", c.retrieval.top_k},
                    {"tau_novelty", c.retrieval.tau_novelty},
                    {"beta_std", c.retrieval.beta_std},
                    {"tau_reward", c.retrieval.tau_reward}};
  j["parse"] = {{"mode", c.parse_mode == agents::ParseMode::Strict ? "strict" : "lenient"}};
  j["doctor_backend"] = backend_json(c.doctor);
  j["patient_backend"] = backend_json(c.patient);
  j["judge_backend"] = backend_json(c.judge);
  j["embedder"] = {{"kind", c.embedder.kind},
                   {"dimension", c.embedder.dimension},
                   {"ngram", c.embedder.ngram}};
  j["reranker"] = {{"kind", c.reranker.kind}};
  j["grpo"] = {{"rollouts_per_scenario", c.groups.rollouts_per_scenario},
               {"reward_mode", grpo::to_string(c.groups.reward_mode)}};
  j["qc"] = {{"enabled", c.qc.enabled},
             {"rules", c.qc.rules ? nlohmann::ordered_json(c.qc.rules->filename().string())
                                  : nlohmann::ordered_json(nullptr)},
             {"llm_judge", c.qc.llm_judge},
             {"llm_threshold", c.qc.llm_threshold}};
  return j;
}

}  // namespace consultrl::orchestrator
