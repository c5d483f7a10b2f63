#include <cmath>
#include <string>

#include "bandit_icl/demonstrators.hpp"
#include "bandit_icl/error.hpp"

namespace bandit_icl {
namespace {

void append_block(Eigen::VectorXd& out, Eigen::Index& pos, const Eigen::MatrixXd& block) {
  // column-major vec
  for (Eigen::Index j = 0; j < block.cols(); ++j) {
    for (Eigen::Index i = 0; i < block.rows(); ++i) out(pos++) = block(i, j);
  }
}

Eigen::VectorXd blocks_of(const Eigen::MatrixXd& m, int rank) {
  const Eigen::Index d1 = m.rows();
  const Eigen::Index d2 = m.cols();
  Eigen::VectorXd out(d1 * d2);
  Eigen::Index pos = 0;
  append_block(out, pos, m.topLeftCorner(rank, rank));
  append_block(out, pos, m.bottomLeftCorner(d1 - rank, rank));
  append_block(out, pos, m.topRightCorner(rank, d2 - rank));
  append_block(out, pos, m.bottomRightCorner(d1 - rank, d2 - rank));
  return out;
}

}  // namespace

Eigen::VectorXd vec_outer(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& z) {
  Eigen::VectorXd out(x.size() * z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) out.segment(j * x.size(), x.size()) = x * z(j);
  return out;
}

Eigen::VectorXd estr_rotated_arm(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& z,
                                 const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, int rank) {
  const Eigen::VectorXd xr = u.transpose() * x;
  const Eigen::VectorXd zr = v.transpose() * z;
  return blocks_of(xr * zr.transpose(), rank);
}

Eigen::VectorXd estr_rotated_parameter(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& u,
                                       const Eigen::MatrixXd& v, int rank) {
  return blocks_of(u.transpose() * theta * v, rank);
}

int estr_reduced_dim(int d1, int d2, int rank) { return (d1 + d2) * rank - rank * rank; }

EstrPolicy::EstrPolicy(const ActionSet& actions, EstrOptions options)
    : actions_(actions), options_(std::move(options)) {
  if (!actions_.right_features) fail(ErrorKind::InvalidArgument, "ESTR needs left and right arm features");
  const int d1 = actions_.dim();
  const int d2 = static_cast<int>(actions_.right_features->cols());
  if (options_.rank < 1 || options_.rank > std::min(d1, d2)) {
    fail(ErrorKind::InvalidArgument, "ESTR rank must lie in [1, min(d1, d2)]");
  }
  explore_rounds_ = options_.explore_rounds >= 0 ? options_.explore_rounds : (options_.horizon + 1) / 2;
  if (explore_rounds_ >= options_.horizon) {
    fail(ErrorKind::BadSplit, "explore rounds " + std::to_string(explore_rounds_) + " >= horizon " +
                                  std::to_string(options_.horizon));
  }
  if (options_.oracle) {
    if (options_.oracle->u.rows() != d1 || options_.oracle->v.rows() != d2) {
      fail(ErrorKind::ShapeMismatch, "oracle (U, V) shapes do not match the arm dimensions");
    }
  }
}

double EstrPolicy::oracle_term(int arm) const {
  if (!options_.oracle) return 0.0;
  const Eigen::MatrixXd uv = options_.oracle->u * options_.oracle->v.transpose();
  return actions_.features.row(arm) * uv * actions_.right_features->row(arm).transpose();
}

void EstrPolicy::rotate() {
  const int d1 = actions_.dim();
  const int d2 = static_cast<int>(actions_.right_features->cols());
  const int dd = d1 * d2;
  const int rank = options_.rank;
  // Least squares on vec(x z^T) features.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(dd, dd) * options_.ls_ridge;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dd);
  for (std::size_t s = 0; s < played_.size(); ++s) {
    const int a = played_[s];
    const Eigen::VectorXd phi =
        vec_outer(actions_.features.row(a).transpose(), actions_.right_features->row(a).transpose());
    gram.noalias() += phi * phi.transpose();
    rhs.noalias() += residuals_[s] * phi;
  }
  const Eigen::VectorXd vec_theta = gram.ldlt().solve(rhs);
  theta_hat_ = Eigen::Map<const Eigen::MatrixXd>(vec_theta.data(), d1, d2);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(theta_hat_, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd& u = svd.matrixU();
  const Eigen::MatrixXd& v = svd.matrixV();
  rotated_arms_.resize(actions_.num_arms(), dd);
  for (int a = 0; a < actions_.num_arms(); ++a) {
    rotated_arms_.row(a) =
        estr_rotated_arm(actions_.features.row(a).transpose(), actions_.right_features->row(a).transpose(), u, v, rank)
            .transpose();
  }
  const int k = estr_reduced_dim(d1, d2, rank);
  Eigen::VectorXd ridge(dd);
  ridge.head(k).setConstant(options_.lambda);
  ridge.tail(dd - k).setConstant(options_.lambda_perp);
  stage2_ = LinUcbState(ridge, options_.alpha);
  // Stage-2 estimates start from the exploration data in rotated coordinates.
  for (std::size_t s = 0; s < played_.size(); ++s) {
    stage2_.update(rotated_arms_.row(played_[s]).transpose(), residuals_[s]);
  }
  rotated_ = true;
}

int EstrPolicy::select(Rng& rng) {
  if (round_ < explore_rounds_) return uniform_step(actions_.num_arms(), rng);
  if (!rotated_) rotate();
  Eigen::VectorXd scores = linucb_scores(stage2_, rotated_arms_);
  if (options_.oracle) {
    for (int a = 0; a < actions_.num_arms(); ++a) scores(a) += oracle_term(a);
  }
  return argmax_lowest(scores);
}

void EstrPolicy::observe(int arm, double reward) {
  const double residual = reward - oracle_term(arm);
  if (rotated_) {
    stage2_.update(rotated_arms_.row(arm).transpose(), residual);
  } else {
    played_.push_back(arm);
    residuals_.push_back(residual);
  }
  ++round_;
}

Trajectory estr_episode(const TaskSpec& task, const ActionSet& actions, const EstrOptions& options, Rng& rng) {
  EstrPolicy policy(actions, options);
  Trajectory traj;
  const Eigen::VectorXd mu = mean_rewards(task, actions);
  traj.true_means.assign(mu.data(), mu.data() + mu.size());
  traj.optimal_action = argmax_lowest(mu);
  traj.family = std::string(to_string(task.family));
  traj.demonstrator = policy.name();
  for (int t = 0; t < options.horizon; ++t) {
    const int a = policy.select(rng);
    const double r = sample_reward(task, actions, a, rng);
    policy.observe(a, r);
    traj.actions.push_back(a);
    traj.rewards.push_back(r);
  }
  return traj;
}

}  // namespace bandit_icl
