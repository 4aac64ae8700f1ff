#include "consultrl/orchestrator/runner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "consultrl/agents/prompts.hpp"
#include "consultrl/agents/response_parser.hpp"
#include "consultrl/common/error.hpp"
#include "consultrl/common/hash.hpp"
#include "consultrl/common/jsonl.hpp"
#include "consultrl/grpo/grpo.hpp"
#include "consultrl/orchestrator/factory.hpp"
#include "consultrl/reward/judge.hpp"

namespace consultrl::orchestrator {

namespace fs = std::filesystem;
using dialogue::ActionKind;
using dialogue::Termination;
using dialogue::TerminalStatus;
using nlohmann::ordered_json;

std::uint64_t rollout_seed(std::uint64_t run_seed, std::string_view scenario_id,
                           std::size_t rollout, SeedRole role) {
  std::uint64_t h = fnv1a64_u64(run_seed);
  h = fnv1a64(scenario_id, h);
  h = fnv1a64_u64(static_cast<std::uint64_t>(rollout), h);
  h = fnv1a64_u64(static_cast<std::uint64_t>(role), h);
  return mix64(h);
}

namespace {

template <class T>
bool is_a(const std::exception& e) {
  return dynamic_cast<const T*>(&e) != nullptr;
}

std::string error_kind(const std::exception& e) {
  if (is_a<TransportError>(e)) return "TransportError";
  if (is_a<ProtocolError>(e)) return "ProtocolError";
  if (is_a<JudgeFormatError>(e)) return "JudgeFormatError";
  if (is_a<FormatViolation>(e)) return "FormatViolation";
  if (is_a<InvalidRequest>(e)) return "InvalidRequest";
  if (is_a<EmptyObservation>(e)) return "EmptyObservation";
  if (is_a<EmbeddingError>(e)) return "EmbeddingError";
  if (is_a<RerankError>(e)) return "RerankError";
  if (is_a<InvalidScore>(e)) return "InvalidScore";
  if (is_a<Error>(e)) return "Error";
  return "Exception";
}

std::string action_text(const dialogue::DoctorAction& a) {
  return std::string(a.kind == ActionKind::Inquiry ? "Question: " : "Recommendation: ") + a.content;
}

// Runs fn(0..n-1) on up to `workers` threads and rethrows the first failure.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::string opening_complaint(const dialogue::PatientScenario& scenario,
                              const EpisodeContext& ctx) {
  if (auto it = scenario.metadata.find("opening_complaint"); it != scenario.metadata.end()) {
    return it->second;
  }
  return ctx.patient.complete(agents::build_patient_prompt(scenario, dialogue::Observation{}),
                              rollout_seed(ctx.seed, scenario.id, 0, SeedRole::Opening));
}

EpisodeResult run_episode(const dialogue::PatientScenario& scenario, const std::string& opening,
                          std::size_t rollout, const EpisodeContext& ctx) {
  EpisodeResult res{dialogue::Episode(scenario.id), rollout, {}, {}, std::nullopt};
  auto& ep = res.episode;
  const auto doctor_seed = rollout_seed(ctx.seed, scenario.id, rollout, SeedRole::Doctor);
  const auto patient_seed = rollout_seed(ctx.seed, scenario.id, rollout, SeedRole::Patient);
  const auto judge_seed = rollout_seed(ctx.seed, scenario.id, rollout, SeedRole::Judge);

  try {
    ep = ep.append_patient(opening);
    TerminalStatus status;
    while ((status = dialogue::is_terminal(ep, ctx.episode)) == TerminalStatus::Continue) {
      const auto obs = ep.observation();
      const std::string state = agents::render_history(obs);
      agents::RetrievedContext retrieved;
      if (ctx.repository && ctx.reranker) {
        retrieved = experience::retrieve(*ctx.repository, *ctx.reranker, state, ctx.retrieval);
      }
      const auto raw = ctx.doctor.complete(agents::build_doctor_prompt(obs, retrieved), doctor_seed);

      dialogue::DoctorAction action;
      try {
        action = agents::parse_doctor_response(raw, ctx.parse_mode);
      } catch (const FormatViolation& e) {
        ep = ep.append_turn_reward(ctx.reward.r_min).close(Termination::Error, std::nullopt);
        res.error = EpisodeError{"FormatViolation", e.what()};
        return res;
      }

      ep = ep.append_action(action);
      const bool more_turns =
          ep.doctor_turn_count() < static_cast<std::size_t>(ctx.episode.max_turns);
      if (action.kind == ActionKind::Inquiry && more_turns) {
        ep = ep.append_patient(ctx.patient.complete(
            agents::build_patient_prompt(scenario, ep.observation()), patient_seed));
      }

      const auto scores = reward::judge_turn(ctx.judge, obs, scenario.ground_truth, raw, judge_seed);
      const auto pr = reward::evaluate_process_reward(scores, ctx.reward);
      ep = ep.append_turn_reward(pr.value);
      res.audit.push_back({ep.doctor_turn_count() - 1, scores, pr.branch, pr.value});
      res.drafts.push_back({state, action_text(action), pr.value});
    }

    if (status == TerminalStatus::Recommended) {
      const auto verdict = reward::judge_outcome(ctx.judge, ep.actions().back().content,
                                                 scenario.ground_truth, judge_seed);
      ep = ep.close(Termination::Recommended, reward::outcome_reward(verdict));
    } else {
      // No recommendation was delivered, which scores as incorrect.
      ep = ep.close(Termination::MaxTurns, 0.0);
    }
  } catch (const Error& e) {
    res.error = EpisodeError{error_kind(e), e.what()};
    if (!ep.is_closed()) ep = ep.close(Termination::Error, std::nullopt);
  }
  return res;
}

nlohmann::ordered_json to_json(const BatchSummary& s) {
  ordered_json j;
  j["episodes_run"] = s.episodes_run;
  j["turn_rewards"] = s.turn_rewards;
  j["mean_turn_reward"] = s.mean_turn_reward;
  j["outcomes"] = s.outcomes;
  j["terminations"] = s.terminations;
  j["stored_experiences"] = s.stored_experiences;
  j["qc_failed"] = s.qc_failed;
  j["groups"] = s.groups;
  j["mean_grpo_loss"] = s.mean_grpo_loss ? ordered_json(*s.mean_grpo_loss) : ordered_json(nullptr);
  return j;
}

namespace {

struct RolloutRecord {
  EpisodeResult result;
  std::optional<evaluation::AdherenceReport> qc;
  std::optional<evaluation::LlmAdherenceResult> llm_qc;
  std::optional<EpisodeError> qc_error;

  bool qc_passed() const {
    if (qc_error) return false;
    if (qc && !qc->passed) return false;
    if (llm_qc && !llm_qc->passed) return false;
    return true;
  }
};

std::string episode_id(const std::string& scenario_id, std::size_t rollout) {
  return scenario_id + "#" + std::to_string(rollout);
}

std::string outcome_key(const std::optional<double>& outcome) {
  if (!outcome) return "none";
  if (*outcome == 1.0) return "1";
  if (*outcome == 0.5) return "0.5";
  return "0";
}

// Opening line as the shared prompt; the doctor's tagged outputs and the
// patient's replies as the response.
std::pair<std::string, std::string> prompt_and_response(const dialogue::Episode& ep) {
  std::string prompt;
  std::string response;
  std::size_t action = 0;
  for (const auto& turn : ep.turns()) {
    if (turn.index == 0) {
      prompt = "Patient: " + turn.content;
      continue;
    }
    if (!response.empty()) response += '\n';
    if (turn.role == dialogue::Role::Doctor) {
      response += "Doctor: " + agents::render_doctor_action(ep.actions()[action++]);
    } else {
      response += "Patient: " + turn.content;
    }
  }
  return {prompt, response};
}

void write_json_file(const fs::path& path, const ordered_json& doc) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

BatchSummary run_batch(const RunConfig& config) {
  config.validate();
  const auto scenarios = dialogue::load_scenarios(config.scenario_path.string());
  const fs::path out = config.output_dir;
  fs::create_directories(out / "episodes");
  fs::create_directories(out / "groups");
  fs::create_directories(out / "reports");

  auto embedder = make_embedder(config.embedder);
  auto repo = experience::ExperienceRepository::open(out / outputs::kExperiences, embedder);
  auto reranker = make_reranker(config.reranker);

  ChatBackendSpec doctor_spec = config.doctor;
  doctor_spec.http.temperature = config.episode.decode_temperature;
  auto doctor = make_chat_backend(doctor_spec, agents::MockProfile::Doctor, config.seed);
  auto patient = make_chat_backend(config.patient, agents::MockProfile::Patient, config.seed);
  auto judge = make_chat_backend(config.judge, agents::MockProfile::Judge, config.seed);

  const EpisodeContext ctx{*doctor,
                           *patient,
                           *judge,
                           config.retrieval_enabled ? repo.get() : nullptr,
                           reranker.get(),
                           config.episode,
                           config.reward,
                           config.retrieval,
                           config.parse_mode,
                           config.seed};

  const evaluation::RuleSet patient_rules(config.qc.rules
                                              ? evaluation::load_rules(config.qc.rules->string())
                                              : evaluation::default_patient_rules());

  const std::size_t rollouts = static_cast<std::size_t>(config.groups.rollouts_per_scenario);
  const std::size_t window = static_cast<std::size_t>(config.commit_window);

  std::vector<ordered_json> episode_lines, group_lines, qc_lines, audit_lines, error_lines;
  std::vector<grpo::GrpoGroup> groups;
  BatchSummary summary;
  double reward_total = 0.0;

  spdlog::info("rollout: {} scenarios x {} rollouts, parallelism {}", scenarios.size(), rollouts,
               config.parallelism);

  for (std::size_t begin = 0; begin < scenarios.size(); begin += window) {
    const std::size_t end = std::min(begin + window, scenarios.size());
    const std::size_t n_scen = end - begin;

    std::vector<std::optional<std::string>> openings(n_scen);
    std::vector<std::optional<EpisodeError>> opening_errors(n_scen);
    parallel_for(n_scen, config.parallelism, [&](std::size_t i) {
      try {
        openings[i] = opening_complaint(scenarios[begin + i], ctx);
      } catch (const Error& e) {
        opening_errors[i] = EpisodeError{error_kind(e), e.what()};
      }
    });

    std::vector<std::optional<RolloutRecord>> records(n_scen * rollouts);
    parallel_for(records.size(), config.parallelism, [&](std::size_t k) {
      const std::size_t s = k / rollouts;
      const std::size_t r = k % rollouts;
      const auto& scenario = scenarios[begin + s];
      RolloutRecord rec{
          openings[s] ? run_episode(scenario, *openings[s], r, ctx)
                      : EpisodeResult{dialogue::Episode(scenario.id).close(Termination::Error,
                                                                           std::nullopt),
                                      r, {}, {}, opening_errors[s]},
          std::nullopt, std::nullopt, std::nullopt};
      if (config.qc.enabled) {
        rec.qc = evaluation::adherence_filter(rec.result.episode, episode_id(scenario.id, r),
                                              patient_rules);
        if (config.qc.llm_judge) {
          try {
            rec.llm_qc = evaluation::judge_patient_adherence(
                *judge, rec.result.episode, config.qc.llm_threshold,
                rollout_seed(config.seed, scenario.id, r, SeedRole::Judge));
          } catch (const Error& e) {
            rec.qc_error = EpisodeError{error_kind(e), e.what()};
          }
        }
      }
      records[k] = std::move(rec);
    });

    std::vector<experience::ExperienceDraft> drafts;
    for (std::size_t s = 0; s < n_scen; ++s) {
      const auto& scenario = scenarios[begin + s];
      std::vector<grpo::ScoredResponse> responses;
      std::string group_prompt;
      for (std::size_t r = 0; r < rollouts; ++r) {
        const auto& rec = *records[s * rollouts + r];
        const auto& ep = rec.result.episode;
        const auto id = episode_id(scenario.id, r);

        episode_lines.push_back(dialogue::to_json(ep));
        ++summary.episodes_run;
        for (double v : ep.turn_rewards()) reward_total += v;
        summary.turn_rewards += ep.turn_rewards().size();
        ++summary.outcomes[outcome_key(ep.outcome_reward())];
        ++summary.terminations[std::string(dialogue::to_string(*ep.termination()))];

        for (const auto& a : rec.result.audit) {
          ordered_json line;
          line["episode_id"] = id;
          line["doctor_turn"] = a.doctor_turn;
          line["scores"] = reward::to_json(a.scores);
          line["branch"] = reward::to_string(a.branch);
          line["reward"] = a.reward;
          audit_lines.push_back(std::move(line));
        }
        if (rec.result.error) {
          error_lines.push_back({{"episode_id", id},
                                 {"kind", rec.result.error->kind},
                                 {"message", rec.result.error->message}});
        }
        if (config.qc.enabled) {
          ordered_json line = evaluation::to_json(*rec.qc);
          if (rec.llm_qc) {
            line["llm_score"] = rec.llm_qc->score;
            line["llm_passed"] = rec.llm_qc->passed;
          }
          if (rec.qc_error) line["llm_error"] = rec.qc_error->kind + ": " + rec.qc_error->message;
          line["passed"] = rec.qc_passed();
          qc_lines.push_back(std::move(line));
        }
        if (!rec.qc_passed()) {
          ++summary.qc_failed;
          continue;
        }
        drafts.insert(drafts.end(), rec.result.drafts.begin(), rec.result.drafts.end());
        if (rollouts >= 2 && ep.turns().size() > 0) {
          auto [prompt, response] = prompt_and_response(ep);
          group_prompt = prompt;
          responses.push_back(
              {std::move(response), grpo::episode_group_reward(ep, config.groups.reward_mode)});
        }
      }
      if (responses.size() >= 2) {
        groups.push_back(grpo::build_group(group_prompt, responses));
        group_lines.push_back(grpo::to_json(groups.back()));
      }
    }

    summary.stored_experiences += repo->store_batch(drafts, config.retrieval.tau_reward);

    jsonl::write_file(out / outputs::kEpisodes, episode_lines);
    jsonl::write_file(out / outputs::kGroups, group_lines);
    jsonl::write_file(out / outputs::kQc, qc_lines);
    jsonl::write_file(out / outputs::kAudit, audit_lines);
    jsonl::write_file(out / outputs::kErrors, error_lines);
    spdlog::info("window {}-{} done: {} episodes, {} experiences stored", begin, end - 1,
                 summary.episodes_run, summary.stored_experiences);
  }

  summary.groups = groups.size();
  summary.mean_turn_reward =
      summary.turn_rewards == 0 ? 0.0 : reward_total / static_cast<double>(summary.turn_rewards);
  if (!groups.empty()) summary.mean_grpo_loss = grpo::mean_grpo_loss(groups);

  ordered_json report;
  report["summary"] = to_json(summary);
  report["config"] = to_json(config);
  report["prompt_version"] = agents::prompt_version();
  write_json_file(out / outputs::kSummary, report);
  return summary;
}

}  // namespace consultrl::orchestrator
