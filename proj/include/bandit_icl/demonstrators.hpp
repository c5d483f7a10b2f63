#pragma once

// Classical bandit algorithms. They generate pretraining data (as weak or
// strong demonstrators) and serve as evaluation baselines.

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bandit_icl/env.hpp"
#include "bandit_icl/rng.hpp"
#include "bandit_icl/trajectory.hpp"

namespace bandit_icl {

struct ArmStats {
  std::vector<int> counts;
  std::vector<double> reward_sums;

  ArmStats() = default;
  explicit ArmStats(int num_arms) : counts(num_arms, 0), reward_sums(num_arms, 0.0) {}

  int num_arms() const { return static_cast<int>(counts.size()); }
  void update(int arm, double reward);
  /// Empirical mean; only meaningful when counts[arm] > 0.
  double mean(int arm) const { return reward_sums[arm] / counts[arm]; }
  int total() const;
};

/// Draws from softmax(values / tau). Probabilities are formed after subtracting
/// the maximum so tiny temperatures do not overflow.
int sample_softmax(std::span<const double> values, double tau, Rng& rng);
std::vector<double> softmax_probabilities(std::span<const double> values, double tau);

/// Gaussian Thompson sampling step. Pulled arms draw from N(mean, sigma_sq / N),
/// unpulled arms from N(0, 1).
int ts_step(const ArmStats& stats, double sigma_sq, Rng& rng);

struct LinUcbState {
  Eigen::MatrixXd gram;  // sum x x^T + lambda I
  Eigen::VectorXd b;     // sum x r
  double alpha = 1.0;
  double lambda = 1.0;
  std::optional<double> temperature;

  LinUcbState() = default;
  LinUcbState(int d, double alpha, double lambda, std::optional<double> temperature = std::nullopt);
  /// Per-coordinate ridge (diagonal of the initial Gram matrix).
  LinUcbState(const Eigen::VectorXd& ridge, double alpha, std::optional<double> temperature = std::nullopt);

  void update(const Eigen::Ref<const Eigen::VectorXd>& x, double reward);
  Eigen::VectorXd theta_hat() const;
};

/// B_a = x_a^T theta_hat + alpha * ||x_a||_{gram^-1} for every row of `arms`.
Eigen::VectorXd linucb_scores(const LinUcbState& state, const Eigen::MatrixXd& arms);
int linucb_step(const LinUcbState& state, const Eigen::MatrixXd& arms, Rng& rng);
int linucb_step(const LinUcbState& state, const ActionSet& actions, Rng& rng);

int uniform_step(int num_arms, Rng& rng);

/// Best empirical arm of a trajectory; ties go to the higher count, then the
/// lower index. Never-pulled arms are excluded.
int approx_optimal_action(const Trajectory& traj);

struct MLinModel {
  Eigen::MatrixXd b_hat;  // d x k, orthonormal columns
  double lambda = 1.0;
};

/// Fits the shared low-dimensional extractor from per-task ridge estimates.
/// `action_sets` holds either one shared set or one set per trajectory.
MLinModel mlin_fit(std::span<const Trajectory> trajectories, std::span<const ActionSet> action_sets,
                   int k, double lambda = 1.0);

/// Greedy arm under theta = B_hat w_hat with w_hat the ridge fit on reduced features.
int mlin_step(const MLinModel& model, const ArmStats& stats, const ActionSet& actions);
Eigen::VectorXd mlin_theta(const MLinModel& model, const ArmStats& stats, const ActionSet& actions);

struct LmmseInputs {
  Eigen::MatrixXd h;    // n x A one-hot rows
  Eigen::VectorXd y;    // n rewards
  Eigen::MatrixXd d_a;  // A x A diagonal, sigma^2 / N(a)
  Eigen::MatrixXd s_a;  // A x A, mu_hat mu_hat^T
  double sigma_theta_sq = 1.0;
};

/// Builds the inputs from an ordered history. `prior_means` supplies the
/// vector behind S_A; when empty the history's own empirical means are used.
LmmseInputs make_lmmse_inputs(std::span<const int> actions, std::span<const double> rewards, int num_arms,
                              double noise_variance, std::span<const double> prior_means = {},
                              double sigma_theta_sq = 1.0);

struct BayesGreedyResult {
  Eigen::VectorXd mu_hat;
  int arm = 0;
};

/// Posterior average mean s S H^T (s H (S + D) H^T)^{-1} Y and its argmax.
/// H (S + D) H^T has rank at most A, so for n > A the inverse is taken as the
/// Moore-Penrose pseudo-inverse (eigenvalues below 1e-12 of the largest dropped).
BayesGreedyResult bayes_greedy_policy(const LmmseInputs& inputs);

// ---------------------------------------------------------------------------
// ESTR (explore subspace, then optimistic linear bandit in rotated coordinates)

struct EstrOptions {
  int rank = 1;
  int horizon = 0;
  int explore_rounds = -1;  // -1: ceil(horizon / 2)
  double alpha = 1.0;
  double lambda = 1.0;
  double lambda_perp = 1.0;  // ridge on the complementary (d1-r)(d2-r) block
  double ls_ridge = 1e-6;
  std::optional<LatentShared> oracle;  // ESTR-Oracle when set
};

/// vec(x z^T) in column-major order (index i + j * d1).
Eigen::VectorXd vec_outer(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& z);

/// Rotated, block-ordered arm vector: [vec(x1 z1^T); vec(x2 z1^T); vec(x1 z2^T); vec(x2 z2^T)]
/// where x' = U^T x, z' = V^T z and 1 / 2 denote the first `rank` / remaining coordinates.
Eigen::VectorXd estr_rotated_arm(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& z,
                                 const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, int rank);
/// The matching parameter vector for theta: blocks of U^T theta V in the same order.
Eigen::VectorXd estr_rotated_parameter(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& u,
                                       const Eigen::MatrixXd& v, int rank);
int estr_reduced_dim(int d1, int d2, int rank);

// ---------------------------------------------------------------------------
// Step-wise policies over a fixed task.

class BanditPolicy {
 public:
  virtual ~BanditPolicy() = default;
  virtual int select(Rng& rng) = 0;
  virtual void observe(int arm, double reward) = 0;
  virtual std::string name() const = 0;
};

class ThompsonPolicy final : public BanditPolicy {
 public:
  ThompsonPolicy(int num_arms, double sigma_sq) : stats_(num_arms), sigma_sq_(sigma_sq) {}
  int select(Rng& rng) override { return ts_step(stats_, sigma_sq_, rng); }
  void observe(int arm, double reward) override { stats_.update(arm, reward); }
  std::string name() const override { return "ts"; }
  const ArmStats& stats() const { return stats_; }

 private:
  ArmStats stats_;
  double sigma_sq_;
};

class LinUcbPolicy final : public BanditPolicy {
 public:
  LinUcbPolicy(const ActionSet& actions, double alpha, double lambda, std::optional<double> temperature = std::nullopt);
  int select(Rng& rng) override { return linucb_step(state_, arms_, rng); }
  void observe(int arm, double reward) override { state_.update(arms_.row(arm).transpose(), reward); }
  std::string name() const override { return state_.temperature ? "linucb_soft" : "linucb"; }
  const LinUcbState& state() const { return state_; }

 private:
  Eigen::MatrixXd arms_;
  LinUcbState state_;
};

class UniformPolicy final : public BanditPolicy {
 public:
  explicit UniformPolicy(int num_arms) : num_arms_(num_arms) {}
  int select(Rng& rng) override { return uniform_step(num_arms_, rng); }
  void observe(int, double) override {}
  std::string name() const override { return "uniform"; }

 private:
  int num_arms_;
};

class MLinGreedyPolicy final : public BanditPolicy {
 public:
  MLinGreedyPolicy(std::shared_ptr<const MLinModel> model, const ActionSet& actions)
      : model_(std::move(model)), actions_(actions), stats_(actions.num_arms()) {}
  int select(Rng&) override { return mlin_step(*model_, stats_, actions_); }
  void observe(int arm, double reward) override { stats_.update(arm, reward); }
  std::string name() const override { return "mlin"; }

 private:
  std::shared_ptr<const MLinModel> model_;
  ActionSet actions_;
  ArmStats stats_;
};

class EstrPolicy final : public BanditPolicy {
 public:
  EstrPolicy(const ActionSet& actions, EstrOptions options);
  int select(Rng& rng) override;
  void observe(int arm, double reward) override;
  std::string name() const override { return options_.oracle ? "estr_oracle" : "estr"; }

  int explore_rounds() const { return explore_rounds_; }
  bool rotated() const { return rotated_; }
  const Eigen::MatrixXd& theta_estimate() const { return theta_hat_; }

 private:
  double oracle_term(int arm) const;
  void rotate();

  ActionSet actions_;
  EstrOptions options_;
  int explore_rounds_;
  int round_ = 0;
  bool rotated_ = false;
  std::vector<int> played_;
  std::vector<double> residuals_;
  Eigen::MatrixXd theta_hat_;
  Eigen::MatrixXd rotated_arms_;  // A x d1 d2
  LinUcbState stage2_;
};

/// Greedy LMMSE policy. Runs Thompson sampling until every arm has been pulled
/// once, then plays argmax of the posterior average mean.
class BayesGreedyPolicy final : public BanditPolicy {
 public:
  BayesGreedyPolicy(int num_arms, double noise_variance, std::vector<double> prior_means,
                    double sigma_theta_sq = 1.0);
  int select(Rng& rng) override;
  void observe(int arm, double reward) override;
  std::string name() const override { return "bayes_greedy"; }

 private:
  ArmStats stats_;
  double noise_variance_;
  std::vector<double> prior_means_;
  double sigma_theta_sq_;
  std::vector<int> actions_;
  std::vector<double> rewards_;
};

/// Runs one ESTR episode of options.horizon rounds on `task`.
Trajectory estr_episode(const TaskSpec& task, const ActionSet& actions, const EstrOptions& options, Rng& rng);

}  // namespace bandit_icl
