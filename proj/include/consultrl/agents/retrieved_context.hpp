#pragma once

#include <string>
#include <vector>

namespace consultrl::agents {

struct RetrievedExperience {
  std::string state_text;
  std::string action_text;
  double reward = 0.0;

  bool operator==(const RetrievedExperience&) const = default;
};

// Experiences handed to the doctor prompt, best first. At most top_k long.
struct RetrievedContext {
  std::vector<RetrievedExperience> experiences;

  bool empty() const noexcept { return experiences.empty(); }
  bool operator==(const RetrievedContext&) const = default;
};

}  // namespace consultrl::agents
