#pragma once

// Multi-task structured bandit families: arm feature sets, per-task hidden
// parameters, mean rewards and noisy reward draws.

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bandit_icl/rng.hpp"

namespace bandit_icl {

enum class Family { Linear, NonlinearSigmoid, Bilinear, Latent, KArmed, Histogram };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

struct FamilyConfig {
  Family family = Family::Linear;
  int d = 2;
  /// Right-arm dimension for Bilinear/Latent with rank >= 2; rank 1 shares the left set.
  int d2 = 0;
  int rank = 1;
  int num_arms = 10;
  double noise_variance = 0.3;
  int horizon = 25;
  int num_new_actions_per_task = 0;
  std::uint64_t seed = 1;

  double noise_std() const;
  int right_dim() const;
  bool shares_right_set() const;
  /// Throws Validation on inconsistent values.
  void validate() const;
};

struct ActionSet {
  Eigen::MatrixXd features;                       // A x d
  std::optional<Eigen::MatrixXd> right_features;  // A x d2 (Bilinear / Latent)
  int invariant_count = 0;

  int num_arms() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
};

/// Low-rank term U V^T shared by every task of a Latent family instance.
struct LatentShared {
  Eigen::MatrixXd u;  // d1 x rank
  Eigen::MatrixXd v;  // d2 x rank
};

struct TaskSpec {
  Family family = Family::Linear;
  Eigen::VectorXd theta;      // Linear, NonlinearSigmoid, KArmed
  Eigen::MatrixXd theta_mat;  // Bilinear, Latent
  std::shared_ptr<const LatentShared> latent;  // Latent only
  Eigen::VectorXd means;      // Histogram only
  double noise_std = 0.0;

  /// theta_mat + U V^T for Latent, theta_mat otherwise.
  Eigen::MatrixXd effective_matrix() const;
};

ActionSet sample_action_set(const FamilyConfig& cfg, Rng& rng);

/// Samples the shared latent factors once per Latent family instance.
LatentShared sample_latent_shared(const FamilyConfig& cfg, Rng& rng);

TaskSpec sample_task(const FamilyConfig& cfg, std::shared_ptr<const LatentShared> shared, Rng& rng);

/// Histogram task from a vector of per-arm means.
TaskSpec make_histogram_task(Eigen::VectorXd means, double noise_std);

double mean_reward(const TaskSpec& task, const ActionSet& actions, int arm);
Eigen::VectorXd mean_rewards(const TaskSpec& task, const ActionSet& actions);
double sample_reward(const TaskSpec& task, const ActionSet& actions, int arm, Rng& rng);

/// Lowest index among maximizers.
int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& values);
int argmax_lowest(const std::vector<double>& values);

int optimal_action(const TaskSpec& task, const ActionSet& actions);

/// Replaces rows [invariant_count, A) with fresh N(0, I/d) draws.
ActionSet resample_new_actions(const ActionSet& actions, Rng& rng);

/// Numerical rank: singular values above tol * sigma_max.
int numerical_rank(const Eigen::MatrixXd& m, double tol = 1e-8);

/// Throws Validation when the populated fields do not match the family.
void validate_task(const TaskSpec& task, int rank_bound);

}  // namespace bandit_icl
