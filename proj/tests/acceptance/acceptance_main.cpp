// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "consultrl/agents/response_parser.hpp"
#include "consultrl/common/error.hpp"
#include "consultrl/evaluation/adherence.hpp"
#include "consultrl/evaluation/win_rate.hpp"
#include "consultrl/experience/repository.hpp"
#include "consultrl/experience/retrieval.hpp"
#include "consultrl/grpo/grpo.hpp"
#include "consultrl/orchestrator/config.hpp"
#include "consultrl/orchestrator/runner.hpp"
#include "consultrl/reward/reward.hpp"
#include "generators.hpp"
#include "reference.hpp"
#include "temp_dir.hpp"

using namespace consultrl;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = CONSULTRL_FIXTURES;

struct Outcome {
  bool ok = true;
  std::string detail;

  // Records the first failure only; later checks keep running for timing.
  void check(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Outcome reward_exactness() {
  Outcome out;
  testkit::Gen gen(1001);
  const reward::RewardConfig cfg;
  int crit = 0, sev = 0, weighted = 0;
  double worst = 0.0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 10000; ++i) {
    const auto s = gen.scores();
    const auto got = reward::evaluate_process_reward(s, cfg);
    switch (got.branch) {
      case reward::RewardBranch::CriticalVeto: ++crit; break;
      case reward::RewardBranch::SevereVeto: ++sev; break;
      case reward::RewardBranch::Weighted: ++weighted; break;
    }
    worst = std::max(worst, std::abs(got.value - testkit::reference_process_reward(s)));
  }
  const double elapsed = seconds_since(t0);
  out.check(worst <= 1e-12, fmt::format("max deviation {:.3e}", worst));
  out.check(crit > 0 && sev > 0 && weighted > 0, "a veto branch was never exercised");
  out.check(elapsed < 5.0, fmt::format("took {:.2f}s", elapsed));
  if (out.ok) {
    out.detail = fmt::format("10000 vectors, max deviation {:.1e}, branches {}/{}/{}, {:.3f}s",
                             worst, crit, sev, weighted, elapsed);
  }
  return out;
}

Outcome veto_dominance() {
  Outcome out;
  testkit::Gen gen(1002);
  const reward::RewardConfig cfg;
  for (int i = 0; i < 1000; ++i) {
    auto s = gen.scores();
    s[reward::Dimension::Safety] = gen.integer(-5, -1);
    out.check(reward::process_reward(s, cfg) == -1.0, "safety veto did not return -1.0");
  }
  for (int i = 0; i < 1000; ++i) {
    auto s = gen.scores();
    s[reward::Dimension::Safety] = gen.integer(0, 5);
    const int which = gen.integer(0, 2);
    if (which != 1) s[reward::Dimension::Reasoning] = gen.integer(-5, -1);
    if (which != 0) s[reward::Dimension::Accuracy] = gen.integer(-5, -1);
    out.check(reward::process_reward(s, cfg) == -0.75, "severe veto did not return -0.75");
  }
  if (out.ok) out.detail = "1000 critical and 1000 severe vectors exact";
  return out;
}

Outcome retrieval_equivalence() {
  Outcome out;
  testkit::Gen gen(1003);
  const auto t0 = Clock::now();
  std::size_t total = 0, nonempty = 0;
  for (int store = 0; store < 200; ++store) {
    const auto n = static_cast<std::size_t>(gen.integer(0, 1000));
    auto rs = testkit::random_store(gen, n, static_cast<std::size_t>(gen.integer(2, 8)));
    experience::ExperienceRepository repo(rs.embedder);
    repo.store_batch(rs.drafts, -1.0);
    experience::RetrievalConfig cfg;
    cfg.top_n = static_cast<std::size_t>(gen.integer(1, 60));
    cfg.top_k = static_cast<std::size_t>(gen.integer(1, static_cast<int>(cfg.top_n)));
    cfg.beta_std = gen.integer(0, 8) / 4.0;
    cfg.alpha = gen.integer(0, 4) / 4.0;
    std::vector<experience::ExperienceTuple> all;
    repo.read([&](std::span<const experience::ExperienceTuple> ts) { all.assign(ts.begin(), ts.end()); });

    const auto expected = testkit::reference_retrieve(all, rs.query, rs.reranker, cfg);
    std::vector<std::uint64_t> got;
    for (const auto& c : experience::retrieve_candidates(repo, rs.reranker, rs.query_text, cfg)) {
      got.push_back(c.tuple.id);
    }
    out.check(got == expected, fmt::format("store {} ({} tuples) differs from reference", store, n));
    total += n;
    nonempty += !got.empty();
  }
  const double elapsed = seconds_since(t0);
  out.check(elapsed < 60.0, fmt::format("took {:.2f}s", elapsed));
  out.check(nonempty > 0, "every retrieval was empty");
  if (out.ok) {
    out.detail = fmt::format("200 stores, {} tuples, {} non-empty results, {:.2f}s", total,
                             nonempty, elapsed);
  }
  return out;
}

Outcome storage_gate() {
  Outcome out;
  testkit::Gen gen(1004);
  testkit::TempDir dir("acceptance_gate");
  auto embedder = std::make_shared<experience::HashingEmbedder>(32, 3);
  std::size_t stored = 0;
  const double tau = 0.7;
  {
    auto repo = experience::ExperienceRepository::open(dir.path() / "store", embedder);
    for (int b = 0; b < 40; ++b) {
      std::vector<experience::ExperienceDraft> batch;
      const int n = gen.integer(0, 12);
      for (int i = 0; i < n; ++i) {
        // Rewards on a 1/10 grid so the boundary value occurs often.
        batch.push_back({gen.words(1, 8), gen.words(1, 8), gen.integer(-10, 10) / 10.0});
      }
      if (b == 0) batch.push_back({"boundary state", "boundary action", tau});
      stored += repo->store_batch(batch, tau);
    }
  }
  const auto tuples = experience::load_tuples(dir.path() / "store");
  out.check(tuples.size() == stored, "full scan count differs from reported stores");
  bool boundary = false;
  for (const auto& t : tuples) {
    out.check(t.reward >= tau, fmt::format("stored reward {} below threshold", t.reward));
    boundary = boundary || (t.reward == tau && t.state_text == "boundary state");
  }
  out.check(boundary, "tuple with reward exactly at the threshold was not stored");
  if (out.ok) out.detail = fmt::format("{} tuples scanned, boundary value stored", tuples.size());
  return out;
}

Outcome grpo_loss() {
  Outcome out;
  testkit::Gen gen(1005);
  double worst = 0.0, worst_shift = 0.0, worst_uniform = 0.0;
  for (int i = 0; i < 1000; ++i) {
    grpo::GrpoGroup g{"p", {"c", gen.real(-1.0, 2.0)}, {}};
    const int n = gen.integer(1, 8);
    for (int k = 0; k < n; ++k) g.rejected.push_back({"r", gen.real(-1.0, 2.0)});
    worst = std::max(worst, std::abs(grpo::grpo_loss(g) - testkit::reference_grpo_loss(g)));

    auto shifted = g;
    const double c = gen.real(-10.0, 10.0);
    shifted.chosen.reward += c;
    for (auto& r : shifted.rejected) r.reward += c;
    worst_shift = std::max(worst_shift, std::abs(grpo::grpo_loss(g) - grpo::grpo_loss(shifted)));

    grpo::GrpoGroup uniform{"p", {"c", g.chosen.reward}, {}};
    for (int k = 0; k < n; ++k) uniform.rejected.push_back({"r", g.chosen.reward});
    worst_uniform = std::max(worst_uniform, std::abs(grpo::grpo_loss(uniform) - std::log(n + 1.0)));
  }
  out.check(worst <= 1e-10, fmt::format("softmax deviation {:.3e}", worst));
  out.check(worst_uniform <= 1e-12, fmt::format("uniform deviation {:.3e}", worst_uniform));
  out.check(worst_shift <= 1e-12, fmt::format("shift deviation {:.3e}", worst_shift));
  if (out.ok) {
    out.detail = fmt::format("1000 groups, deviations softmax {:.1e}, uniform {:.1e}, shift {:.1e}",
                             worst, worst_uniform, worst_shift);
  }
  return out;
}

Outcome dynamic_threshold() {
  Outcome out;
  testkit::Gen gen(1006);
  double worst = 0.0;
  int singletons = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto n = static_cast<std::size_t>(i < 100 ? 1 : gen.integer(1, 40));
    singletons += n == 1;
    const auto rewards = gen.rewards(n, -1.0, 2.0);
    const double beta = gen.real(0.0, 2.0);
    // Two-pass population variance in long double.
    long double mean = 0.0L;
    for (double r : rewards) mean += r;
    mean /= static_cast<long double>(n);
    long double var = 0.0L;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<long double>(n);
    const double expected = static_cast<double>(mean + beta * std::sqrt(var));
    worst = std::max(worst, std::abs(experience::dynamic_threshold(rewards, beta) - expected));
  }
  out.check(worst <= 1e-12, fmt::format("max deviation {:.3e}", worst));
  if (out.ok) {
    out.detail = fmt::format("1000 lists ({} singletons), max deviation {:.1e}", singletons, worst);
  }
  return out;
}

Outcome win_rates() {
  Outcome out;
  const auto table =
      evaluation::aggregate_win_rates(evaluation::load_judgments((kFixtures / "judgments_100.jsonl").string()));
  std::ifstream in(kFixtures / "judgments_100.expected.json");
  const auto expected = nlohmann::json::parse(in);
  std::size_t cells = 0;
  for (const auto& [metric_name, per_model] : expected.items()) {
    const auto metric = evaluation::metric_from_string(metric_name);
    out.check(table.count(metric) && table.at(metric).size() == per_model.size(),
              "model set differs for " + metric_name);
    if (!table.count(metric)) continue;
    long wins = 0, losses = 0;
    for (const auto& [model, rec] : table.at(metric)) {
      wins += rec.wins;
      losses += rec.losses;
      if (rec.wins + rec.losses == 0) {
        out.check(rec.win_rate == 0.0, model + " has only ties but a non-zero win rate");
      }
    }
    out.check(wins == losses, "conservation fails for " + metric_name);
    for (const auto& [model, counts] : per_model.items()) {
      const auto it = table.at(metric).find(model);
      out.check(it != table.at(metric).end(), "missing " + metric_name + "/" + model);
      if (it == table.at(metric).end()) continue;
      const auto& r = it->second;
      out.check(r.wins == counts["wins"] && r.losses == counts["losses"] &&
                    r.ties == counts["ties"] && r.comparisons == counts["comparisons"],
                "counts differ for " + metric_name + "/" + model);
      ++cells;
    }
  }
  if (out.ok) out.detail = fmt::format("{} metric/model cells match, conservation holds", cells);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome end_to_end_determinism() {
  Outcome out;
  testkit::TempDir dir("acceptance_e2e");
  const std::vector<std::pair<std::string, int>> runs{{"a_p1", 1}, {"b_p1", 1}, {"a_p4", 4}, {"b_p4", 4}};
  std::size_t episodes = 0;
  for (const auto& [name, parallelism] : runs) {
    auto cfg = orchestrator::load_run_config(kFixtures / "batch.ini");
    cfg.output_dir = dir.path() / name;
    cfg.parallelism = parallelism;
    episodes = orchestrator::run_batch(cfg).episodes_run;
  }
  const fs::path exp_dir = orchestrator::outputs::kExperiences;
  const std::vector<fs::path> files{orchestrator::outputs::kEpisodes, orchestrator::outputs::kGroups,
                                    exp_dir / experience::layout::kLogFile,
                                    exp_dir / experience::layout::kEmbeddingFile};
  for (const auto& f : files) {
    const auto reference = slurp(dir.path() / runs[0].first / f);
    out.check(!reference.empty() || f == files[1], f.string() + " is empty");
    for (std::size_t i = 1; i < runs.size(); ++i) {
      out.check(slurp(dir.path() / runs[i].first / f) == reference,
                f.string() + " differs in run " + runs[i].first);
    }
  }
  if (out.ok) {
    out.detail = fmt::format("5 scenarios, {} episodes, 4 runs byte-identical across parallelism 1 and 4",
                             episodes);
  }
  return out;
}

Outcome parser_round_trip() {
  Outcome out;
  testkit::Gen gen(1009);
  for (int i = 0; i < 1000; ++i) {
    const auto action = gen.action();
    dialogue::DoctorAction back;
    try {
      back = agents::parse_doctor_response(agents::render_doctor_action(action));
    } catch (const Error& e) {
      out.check(false, fmt::format("action {} failed to parse: {}", i, e.what()));
      continue;
    }
    out.check(back == action, fmt::format("action {} changed in round trip", i));
  }
  const std::vector<std::pair<std::string, std::string>> malformed{
      {"missing tags", "Question: any fever?"},
      {"unclosed tag", "<think>unsure</think><answer>Question: any fever?"},
      {"bad prefix", "<think>unsure</think><answer>Maybe drink water.</answer>"},
  };
  for (const auto& [label, text] : malformed) {
    bool raised = false;
    try {
      (void)agents::parse_doctor_response(text);
    } catch (const FormatViolation&) {
      raised = true;
    }
    out.check(raised, label + " did not raise FormatViolation");
  }
  if (out.ok) out.detail = "1000 actions round-trip, 3 malformed classes rejected";
  return out;
}

Outcome adherence_filter() {
  Outcome out;
  const std::string phrase = "As a large language model, I cannot experience symptoms.";
  auto base = dialogue::Episode("qc").append_patient("My throat is sore.");
  const auto patient_break =
      base.append_action({"ask", dialogue::ActionKind::Inquiry, "How long has it been sore?"})
          .append_patient(phrase);
  const auto doctor_says_it =
      base.append_action({"ask", dialogue::ActionKind::Inquiry, phrase + " How long?"})
          .append_patient("About two days.");
  const auto rules = evaluation::default_patient_rules();
  const auto failing = evaluation::adherence_filter(patient_break, "patient", rules);
  const auto passing = evaluation::adherence_filter(doctor_says_it, "doctor", rules);
  out.check(!failing.passed, "persona break in a patient turn passed QC");
  out.check(passing.passed, "phrase in a doctor turn failed QC");
  if (out.ok) out.detail = "patient turn flagged, doctor turn clean";
  return out;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"reward exactness", reward_exactness},
      {"veto dominance", veto_dominance},
      {"retrieval oracle equivalence", retrieval_equivalence},
      {"storage gate", storage_gate},
      {"grpo loss", grpo_loss},
      {"dynamic threshold", dynamic_threshold},
      {"win-rate aggregation", win_rates},
      {"end-to-end determinism", end_to_end_determinism},
      {"parser round-trip", parser_round_trip},
      {"adherence filter", adherence_filter},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome result;
    try {
      result = criteria[i].second();
    } catch (const std::exception& e) {
      result = {false, std::string("threw: ") + e.what()};
    }
    failures += !result.ok;
    fmt::print("{} {:>2} {}: {}\n", result.ok ? "PASS" : "FAIL", i + 1, criteria[i].first,
               result.detail);
  }
  return failures == 0 ? 0 : 1;
}
