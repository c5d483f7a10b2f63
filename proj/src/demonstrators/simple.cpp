#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bandit_icl/demonstrators.hpp"
#include "bandit_icl/error.hpp"

namespace bandit_icl {

void ArmStats::update(int arm, double reward) {
  if (arm < 0 || arm >= num_arms()) fail(ErrorKind::IndexOutOfRange, "arm " + std::to_string(arm));
  ++counts[arm];
  reward_sums[arm] += reward;
}

int ArmStats::total() const {
  int t = 0;
  for (int c : counts) t += c;
  return t;
}

std::vector<double> softmax_probabilities(std::span<const double> values, double tau) {
  if (!(tau > 0.0)) fail(ErrorKind::InvalidArgument, "softmax temperature must be positive");
  if (values.empty()) fail(ErrorKind::InvalidArgument, "softmax over empty vector");
  const double vmax = *std::max_element(values.begin(), values.end());
  std::vector<double> p(values.size());
  double z = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    p[i] = std::exp((values[i] - vmax) / tau);
    z += p[i];
  }
  for (double& x : p) x /= z;
  return p;
}

int sample_softmax(std::span<const double> values, double tau, Rng& rng) {
  const std::vector<double> p = softmax_probabilities(values, tau);
  return static_cast<int>(rng.categorical(p));
}

int uniform_step(int num_arms, Rng& rng) {
  return static_cast<int>(rng.uniform_index(static_cast<std::size_t>(num_arms)));
}

int approx_optimal_action(const Trajectory& traj) {
  if (traj.actions.empty()) fail(ErrorKind::EmptyTrajectory, "no pulls to estimate the best arm from");
  int arms = traj.num_arms();
  for (int a : traj.actions) arms = std::max(arms, a + 1);
  ArmStats stats(arms);
  for (std::size_t t = 0; t < traj.actions.size(); ++t) stats.update(traj.actions[t], traj.rewards[t]);
  int best = -1;
  for (int a = 0; a < arms; ++a) {
    if (stats.counts[a] == 0) continue;
    if (best < 0) {
      best = a;
      continue;
    }
    const double m = stats.mean(a);
    const double mb = stats.mean(best);
    if (m > mb || (m == mb && stats.counts[a] > stats.counts[best])) best = a;
  }
  return best;
}

void validate_trajectory(const Trajectory& traj) {
  if (traj.actions.size() != traj.rewards.size()) {
    fail(ErrorKind::Validation, "trajectory actions/rewards length mismatch");
  }
  const int arms = traj.num_arms();
  if (arms < 1) fail(ErrorKind::Validation, "trajectory without true means");
  for (int a : traj.actions) {
    if (a < 0 || a >= arms) fail(ErrorKind::Validation, "trajectory action out of range");
  }
  for (double r : traj.rewards) {
    if (!std::isfinite(r)) fail(ErrorKind::Validation, "non-finite reward");
  }
  if (traj.optimal_action != argmax_lowest(traj.true_means)) {
    fail(ErrorKind::Validation, "optimal_action is not the lowest-index argmax of true_means");
  }
}

}  // namespace bandit_icl
