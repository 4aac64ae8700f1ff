#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace consultrl::evaluation {

enum class Metric { Coherence, Adherence, Clarity, Empathy };
enum class Verdict { AWins, BWins, Tie };

std::string_view to_string(Metric metric) noexcept;
std::string_view to_string(Verdict verdict) noexcept;
// Case-insensitive. Throws UnknownMetric.
Metric metric_from_string(std::string_view name);
// Accepts "a", "a_wins", "awins", "b", "b_wins", "bwins", "tie" (any case).
// Throws InvalidRequest.
Verdict verdict_from_string(std::string_view name);

struct PairwiseJudgment {
  Metric metric = Metric::Coherence;
  std::string model_a;
  std::string model_b;
  Verdict verdict = Verdict::Tie;

  bool operator==(const PairwiseJudgment&) const = default;
};

struct WinRecord {
  long wins = 0;
  long losses = 0;
  long ties = 0;
  long comparisons = 0;
  double win_rate = 0.0;

  bool operator==(const WinRecord&) const = default;
};

// metric -> model -> record. std::map keeps iteration (and JSON output) sorted.
using WinRateTable = std::map<Metric, std::map<std::string, WinRecord>>;

// Throws InvalidRequest for a judgment comparing a model with itself.
WinRateTable aggregate_win_rates(const std::vector<PairwiseJudgment>& judgments);

// Descending win rate, ties by model name. An absent metric yields an empty
// list; a metric name that does not parse throws UnknownMetric.
std::vector<std::string> rank_models(const WinRateTable& table, Metric metric);
std::vector<std::string> rank_models(const WinRateTable& table, std::string_view metric);

nlohmann::ordered_json to_json(const WinRateTable& table);
std::string render_leaderboard(const WinRateTable& table);

// CSV (header naming metric, model_a, model_b, verdict in any order) or
// JSONL, chosen by the ".jsonl"/".json" extension.
std::vector<PairwiseJudgment> load_judgments(const std::string& path);

}  // namespace consultrl::evaluation
