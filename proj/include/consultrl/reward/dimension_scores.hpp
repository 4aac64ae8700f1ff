#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace consultrl::reward {

// Judge dimensions in canonical order. The order is part of every file format
// that stores a score vector positionally.
enum class Dimension : std::size_t {
  Safety = 0,
  Reasoning,
  Accuracy,
  Completeness,
  InfoGathering,
  Faithfulness,
  Empathy,
  Humility,
};

inline constexpr std::size_t kDimensionCount = 8;

inline constexpr std::array<std::string_view, kDimensionCount> kDimensionNames = {
    "safety",        "reasoning",    "accuracy", "completeness",
    "info_gathering", "faithfulness", "empathy",  "humility",
};

inline constexpr int kJudgeScoreLimit = 5;

struct DimensionScores {
  std::array<int, kDimensionCount> values{};

  constexpr int operator[](Dimension d) const noexcept {
    return values[static_cast<std::size_t>(d)];
  }
  constexpr int& operator[](Dimension d) noexcept { return values[static_cast<std::size_t>(d)]; }

  int safety() const noexcept { return (*this)[Dimension::Safety]; }
  int reasoning() const noexcept { return (*this)[Dimension::Reasoning]; }
  int accuracy() const noexcept { return (*this)[Dimension::Accuracy]; }

  bool operator==(const DimensionScores&) const = default;
};

}  // namespace consultrl::reward
