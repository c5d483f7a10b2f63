#include <cmath>
#include <vector>

#include "bandit_icl/demonstrators.hpp"
#include "bandit_icl/error.hpp"

namespace bandit_icl {

LinUcbState::LinUcbState(int d, double alpha_, double lambda_, std::optional<double> temperature_)
    : gram(Eigen::MatrixXd::Identity(d, d) * lambda_),
      b(Eigen::VectorXd::Zero(d)),
      alpha(alpha_),
      lambda(lambda_),
      temperature(temperature_) {}

LinUcbState::LinUcbState(const Eigen::VectorXd& ridge, double alpha_, std::optional<double> temperature_)
    : gram(ridge.asDiagonal()),
      b(Eigen::VectorXd::Zero(ridge.size())),
      alpha(alpha_),
      lambda(ridge.size() > 0 ? ridge(0) : 0.0),
      temperature(temperature_) {}

void LinUcbState::update(const Eigen::Ref<const Eigen::VectorXd>& x, double reward) {
  gram.noalias() += x * x.transpose();
  b.noalias() += reward * x;
}

Eigen::VectorXd LinUcbState::theta_hat() const {
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) fail(ErrorKind::SingularGram, "LinUCB Gram matrix is not positive definite");
  return llt.solve(b);
}

Eigen::VectorXd linucb_scores(const LinUcbState& state, const Eigen::MatrixXd& arms) {
  Eigen::LLT<Eigen::MatrixXd> llt(state.gram);
  if (llt.info() != Eigen::Success) fail(ErrorKind::SingularGram, "LinUCB Gram matrix is not positive definite");
  const Eigen::VectorXd theta = llt.solve(state.b);
  // ||x||_{G^-1}^2 = ||L^-1 x||^2
  const Eigen::MatrixXd half = llt.matrixL().solve(arms.transpose());
  Eigen::VectorXd scores(arms.rows());
  for (Eigen::Index a = 0; a < arms.rows(); ++a) {
    scores(a) = arms.row(a).dot(theta) + state.alpha * half.col(a).norm();
  }
  return scores;
}

int linucb_step(const LinUcbState& state, const Eigen::MatrixXd& arms, Rng& rng) {
  const Eigen::VectorXd scores = linucb_scores(state, arms);
  if (state.temperature) {
    const std::vector<double> v(scores.data(), scores.data() + scores.size());
    return sample_softmax(v, *state.temperature, rng);
  }
  return argmax_lowest(scores);
}

int linucb_step(const LinUcbState& state, const ActionSet& actions, Rng& rng) {
  return linucb_step(state, actions.features, rng);
}

LinUcbPolicy::LinUcbPolicy(const ActionSet& actions, double alpha, double lambda, std::optional<double> temperature)
    : arms_(actions.features), state_(actions.dim(), alpha, lambda, temperature) {}

}  // namespace bandit_icl
