#include "consultrl/evaluation/win_rate.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "consultrl/common/error.hpp"
#include "consultrl/common/jsonl.hpp"
#include "consultrl/common/text.hpp"

namespace consultrl::evaluation {

namespace {
constexpr std::array<std::pair<Metric, std::string_view>, 4> kMetricNames{{
    {Metric::Coherence, "coherence"},
    {Metric::Adherence, "adherence"},
    {Metric::Clarity, "clarity"},
    {Metric::Empathy, "empathy"},
}};
}  // namespace

std::string_view to_string(Metric metric) noexcept {
  for (const auto& [m, name] : kMetricNames) {
    if (m == metric) return name;
  }
  return "unknown";
}

std::string_view to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::AWins: return "a_wins";
    case Verdict::BWins: return "b_wins";
    case Verdict::Tie: return "tie";
  }
  return "tie";
}

Metric metric_from_string(std::string_view name) {
  const auto lower = text::to_lower(text::trim(name));
  for (const auto& [m, n] : kMetricNames) {
    if (lower == n) return m;
  }
  throw UnknownMetric("unknown metric '" + std::string(name) + "'");
}

Verdict verdict_from_string(std::string_view name) {
  const auto v = text::to_lower(text::trim(name));
  if (v == "a" || v == "a_wins" || v == "awins") return Verdict::AWins;
  if (v == "b" || v == "b_wins" || v == "bwins") return Verdict::BWins;
  if (v == "tie") return Verdict::Tie;
  throw InvalidRequest("unknown verdict '" + std::string(name) + "'");
}

WinRateTable aggregate_win_rates(const std::vector<PairwiseJudgment>& judgments) {
  WinRateTable table;
  for (const auto& j : judgments) {
    if (j.model_a == j.model_b) {
      throw InvalidRequest("judgment compares model '" + j.model_a + "' with itself");
    }
    auto& per_model = table[j.metric];
    auto& a = per_model[j.model_a];
    auto& b = per_model[j.model_b];
    switch (j.verdict) {
      case Verdict::AWins: ++a.wins; ++b.losses; break;
      case Verdict::BWins: ++b.wins; ++a.losses; break;
      case Verdict::Tie: ++a.ties; ++b.ties; break;
    }
    ++a.comparisons;
    ++b.comparisons;
  }
  for (auto& [metric, per_model] : table) {
    for (auto& [model, r] : per_model) {
      const long decisive = r.wins + r.losses;
      r.win_rate = decisive == 0 ? 0.0 : static_cast<double>(r.wins) / static_cast<double>(decisive);
    }
  }
  return table;
}

std::vector<std::string> rank_models(const WinRateTable& table, Metric metric) {
  std::vector<std::pair<std::string, double>> rows;
  if (auto it = table.find(metric); it != table.end()) {
    for (const auto& [model, r] : it->second) rows.emplace_back(model, r.win_rate);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (auto& [model, rate] : rows) out.push_back(std::move(model));
  return out;
}

std::vector<std::string> rank_models(const WinRateTable& table, std::string_view metric) {
  return rank_models(table, metric_from_string(metric));
}

nlohmann::ordered_json to_json(const WinRateTable& table) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& [metric, per_model] : table) {
    nlohmann::ordered_json models = nlohmann::ordered_json::object();
    for (const auto& [model, r] : per_model) {
      models[model] = {{"wins", r.wins},
                       {"losses", r.losses},
                       {"ties", r.ties},
                       {"comparisons", r.comparisons},
                       {"win_rate", r.win_rate}};
    }
    out[std::string(to_string(metric))] = std::move(models);
  }
  return out;
}

std::string render_leaderboard(const WinRateTable& table) {
  std::string out;
  for (const auto& [metric, per_model] : table) {
    out += fmt::format("[{}]\n", to_string(metric));
    int rank = 0;
    for (const auto& model : rank_models(table, metric)) {
      const auto& r = per_model.at(model);
      out += fmt::format("{:>3}. {:<24} {:.4f}  W={} L={} T={} C={}\n", ++rank, model, r.win_rate,
                         r.wins, r.losses, r.ties, r.comparisons);
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  for (auto& f : fields) f = std::string(text::trim(f));
  return fields;
}

PairwiseJudgment judgment_from_fields(std::string_view metric, std::string model_a,
                                      std::string model_b, std::string_view verdict) {
  PairwiseJudgment j{metric_from_string(metric), std::move(model_a), std::move(model_b),
                     verdict_from_string(verdict)};
  if (j.model_a.empty() || j.model_b.empty()) throw InvalidRequest("empty model name in judgment");
  return j;
}

}  // namespace

std::vector<PairwiseJudgment> load_judgments(const std::string& path) {
  const auto ext = text::to_lower(std::filesystem::path(path).extension().string());
  std::vector<PairwiseJudgment> out;
  if (ext == ".jsonl" || ext == ".json") {
    for (const auto& r : jsonl::read_file(path)) {
      try {
        out.push_back(judgment_from_fields(
            r.at("metric").get<std::string>(), r.at("model_a").get<std::string>(),
            r.at("model_b").get<std::string>(), r.at("verdict").get<std::string>()));
      } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": malformed judgment: " + e.what());
      }
    }
    return out;
  }

  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::array<int, 4> col{-1, -1, -1, -1};  // metric, model_a, model_b, verdict
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (!have_header) {
      static constexpr std::array<std::string_view, 4> kCols{"metric", "model_a", "model_b",
                                                             "verdict"};
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto name = text::to_lower(fields[i]);
        for (std::size_t c = 0; c < kCols.size(); ++c) {
          if (name == kCols[c]) col[c] = static_cast<int>(i);
        }
      }
      if (std::find(col.begin(), col.end(), -1) != col.end()) {
        throw IoError(path + ": CSV header must name metric, model_a, model_b, verdict");
      }
      have_header = true;
      continue;
    }
    const int width = *std::max_element(col.begin(), col.end());
    if (static_cast<int>(fields.size()) <= width) {
      throw IoError(path + ":" + std::to_string(line_no) + ": too few columns");
    }
    out.push_back(judgment_from_fields(fields[col[0]], fields[col[1]], fields[col[2]],
                                       fields[col[3]]));
  }
  return out;
}

}  // namespace consultrl::evaluation
