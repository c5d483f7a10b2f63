#include <string>

#include "bandit_icl/demonstrators.hpp"
#include "bandit_icl/error.hpp"

namespace bandit_icl {

LmmseInputs make_lmmse_inputs(std::span<const int> actions, std::span<const double> rewards, int num_arms,
                              double noise_variance, std::span<const double> prior_means, double sigma_theta_sq) {
  if (actions.size() != rewards.size()) fail(ErrorKind::InvalidArgument, "actions/rewards length mismatch");
  const auto n = static_cast<Eigen::Index>(actions.size());
  LmmseInputs in;
  in.h = Eigen::MatrixXd::Zero(n, num_arms);
  in.y.resize(n);
  ArmStats stats(num_arms);
  for (Eigen::Index t = 0; t < n; ++t) {
    const int a = actions[static_cast<std::size_t>(t)];
    if (a < 0 || a >= num_arms) fail(ErrorKind::IndexOutOfRange, "action out of range");
    in.h(t, a) = 1.0;
    in.y(t) = rewards[static_cast<std::size_t>(t)];
    stats.update(a, in.y(t));
  }
  in.d_a = Eigen::MatrixXd::Zero(num_arms, num_arms);
  Eigen::VectorXd mu(num_arms);
  for (int a = 0; a < num_arms; ++a) {
    if (stats.counts[a] > 0) in.d_a(a, a) = noise_variance / stats.counts[a];
    mu(a) = stats.counts[a] > 0 ? stats.mean(a) : 0.0;
  }
  if (!prior_means.empty()) {
    if (static_cast<int>(prior_means.size()) != num_arms) fail(ErrorKind::InvalidArgument, "prior_means length");
    for (int a = 0; a < num_arms; ++a) mu(a) = prior_means[static_cast<std::size_t>(a)];
  }
  in.s_a = mu * mu.transpose();
  in.sigma_theta_sq = sigma_theta_sq;
  return in;
}

BayesGreedyResult bayes_greedy_policy(const LmmseInputs& in) {
  const Eigen::Index n = in.h.rows();
  const Eigen::Index arms = in.h.cols();
  if (in.y.size() != n || in.d_a.rows() != arms || in.s_a.rows() != arms) {
    fail(ErrorKind::ShapeMismatch, "LMMSE inputs have inconsistent shapes");
  }
  const Eigen::VectorXd pulls = in.h.colwise().sum().transpose();
  for (Eigen::Index a = 0; a < arms; ++a) {
    if (pulls(a) <= 0.0) fail(ErrorKind::UnexploredArm, "arm " + std::to_string(a) + " was never pulled");
  }
  const Eigen::MatrixXd m = in.sigma_theta_sq * (in.h * (in.s_a + in.d_a) * in.h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  const double cutoff = 1e-12 * top;
  Eigen::VectorXd inv_ev = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ev(i) > cutoff) inv_ev(i) = 1.0 / ev(i);
  }
  const Eigen::MatrixXd& q = eig.eigenvectors();
  const Eigen::VectorXd solved = q * inv_ev.asDiagonal() * (q.transpose() * in.y);
  BayesGreedyResult out;
  out.mu_hat = in.sigma_theta_sq * (in.s_a * (in.h.transpose() * solved));
  out.arm = argmax_lowest(out.mu_hat);
  return out;
}

BayesGreedyPolicy::BayesGreedyPolicy(int num_arms, double noise_variance, std::vector<double> prior_means,
                                     double sigma_theta_sq)
    : stats_(num_arms),
      noise_variance_(noise_variance),
      prior_means_(std::move(prior_means)),
      sigma_theta_sq_(sigma_theta_sq) {}

int BayesGreedyPolicy::select(Rng& rng) {
  for (int c : stats_.counts) {
    if (c == 0) return ts_step(stats_, noise_variance_ > 0.0 ? noise_variance_ : 1.0, rng);
  }
  const LmmseInputs in = make_lmmse_inputs(actions_, rewards_, stats_.num_arms(), noise_variance_,
                                           prior_means_, sigma_theta_sq_);
  return bayes_greedy_policy(in).arm;
}

void BayesGreedyPolicy::observe(int arm, double reward) {
  stats_.update(arm, reward);
  actions_.push_back(arm);
  rewards_.push_back(reward);
}

}  // namespace bandit_icl
