#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bandit_icl {

/// One in-context dataset: the ordered (action, reward) interactions with a
/// single task, plus the ground truth needed for regret.
struct Trajectory {
  std::uint64_t task_id = 0;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> true_means;
  int optimal_action = 0;
  std::string family;
  std::string demonstrator;

  int horizon() const { return static_cast<int>(actions.size()); }
  int num_arms() const { return static_cast<int>(true_means.size()); }

  bool operator==(const Trajectory&) const = default;
};

/// Throws Validation if lengths, arm indices or optimal_action are inconsistent.
void validate_trajectory(const Trajectory& traj);

}  // namespace bandit_icl
