#include <string>

#include "bandit_icl/demonstrators.hpp"
#include "bandit_icl/error.hpp"

namespace bandit_icl {
namespace {

Eigen::VectorXd ridge_from_stats(const ArmStats& stats, const Eigen::MatrixXd& feats, double lambda) {
  const Eigen::Index d = feats.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(d, d) * lambda;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  for (int a = 0; a < stats.num_arms(); ++a) {
    if (stats.counts[a] == 0) continue;
    const Eigen::VectorXd x = feats.row(a).transpose();
    gram.noalias() += stats.counts[a] * (x * x.transpose());
    rhs.noalias() += stats.reward_sums[a] * x;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) fail(ErrorKind::SingularGram, "ridge Gram matrix is not positive definite");
  return llt.solve(rhs);
}

}  // namespace

MLinModel mlin_fit(std::span<const Trajectory> trajectories, std::span<const ActionSet> action_sets, int k,
                   double lambda) {
  if (action_sets.empty()) fail(ErrorKind::InvalidArgument, "mlin_fit needs at least one action set");
  if (action_sets.size() != 1 && action_sets.size() != trajectories.size()) {
    fail(ErrorKind::InvalidArgument, "mlin_fit: one shared action set or one per trajectory");
  }
  const int d = action_sets[0].dim();
  if (k < 1 || k > d) fail(ErrorKind::InvalidArgument, "mlin_fit: k must lie in [1, d]");
  const auto m = static_cast<Eigen::Index>(trajectories.size());
  if (m < k) {
    fail(ErrorKind::InsufficientData, "mlin_fit: " + std::to_string(m) + " tasks for rank " + std::to_string(k));
  }
  Eigen::MatrixXd stacked(d, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const ActionSet& set = action_sets.size() == 1 ? action_sets[0] : action_sets[static_cast<std::size_t>(i)];
    const Trajectory& traj = trajectories[static_cast<std::size_t>(i)];
    ArmStats stats(set.num_arms());
    for (std::size_t t = 0; t < traj.actions.size(); ++t) stats.update(traj.actions[t], traj.rewards[t]);
    stacked.col(i) = ridge_from_stats(stats, set.features, lambda);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinU);
  MLinModel model;
  model.b_hat = svd.matrixU().leftCols(k);
  model.lambda = lambda;
  return model;
}

Eigen::VectorXd mlin_theta(const MLinModel& model, const ArmStats& stats, const ActionSet& actions) {
  const Eigen::MatrixXd reduced = actions.features * model.b_hat;  // A x k
  const Eigen::VectorXd w = ridge_from_stats(stats, reduced, model.lambda);
  return model.b_hat * w;
}

int mlin_step(const MLinModel& model, const ArmStats& stats, const ActionSet& actions) {
  if (stats.total() == 0) return 0;
  const Eigen::VectorXd theta = mlin_theta(model, stats, actions);
  return argmax_lowest(actions.features * theta);
}

}  // namespace bandit_icl
