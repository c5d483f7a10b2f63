#include "bandit_icl/env.hpp"

#include <cmath>
#include <string>

#include "bandit_icl/error.hpp"

namespace bandit_icl {
namespace {

Eigen::MatrixXd gaussian_matrix(int rows, int cols, double stddev, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, stddev);
  }
  return m;
}

Eigen::VectorXd gaussian_vector(int n, double stddev, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal(0.0, stddev);
  return v;
}

double nonlinear_sigmoid(double z) { return 1.0 / (1.0 + 0.5 * std::exp(2.0 * std::exp(-z))); }

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Linear: return "linear";
    case Family::NonlinearSigmoid: return "nonlinear";
    case Family::Bilinear: return "bilinear";
    case Family::Latent: return "latent";
    case Family::KArmed: return "karmed";
    case Family::Histogram: return "histogram";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::Linear, Family::NonlinearSigmoid, Family::Bilinear, Family::Latent,
                   Family::KArmed, Family::Histogram}) {
    if (to_string(f) == name) return f;
  }
  fail(ErrorKind::Validation, "unknown family '" + std::string(name) + "'");
}

double FamilyConfig::noise_std() const { return std::sqrt(noise_variance); }

bool FamilyConfig::shares_right_set() const {
  return (family == Family::Bilinear || family == Family::Latent) && rank == 1;
}

int FamilyConfig::right_dim() const {
  if (family != Family::Bilinear && family != Family::Latent) return 0;
  if (shares_right_set()) return d;
  return d2 > 0 ? d2 : d;
}

void FamilyConfig::validate() const {
  if (num_arms < 2) fail(ErrorKind::Validation, "num_arms must be >= 2");
  if (d < 1) fail(ErrorKind::Validation, "d must be >= 1");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    fail(ErrorKind::Validation, "noise_variance must be finite and >= 0");
  }
  if (horizon < 0) fail(ErrorKind::Validation, "horizon must be >= 0");
  if (num_new_actions_per_task < 0 || num_new_actions_per_task > num_arms) {
    fail(ErrorKind::Validation, "num_new_actions_per_task must lie in [0, num_arms]");
  }
  if (family == Family::KArmed && d != num_arms) {
    fail(ErrorKind::Validation, "karmed family requires d == num_arms (canonical-basis arms)");
  }
  if (family == Family::Bilinear || family == Family::Latent) {
    const int dr = right_dim();
    if (rank < 1 || rank > std::min(d, dr)) {
      fail(ErrorKind::Validation, "rank must lie in [1, min(d, d2)]");
    }
  }
  if (family == Family::Histogram && num_new_actions_per_task != 0) {
    fail(ErrorKind::Validation, "histogram family has no feature vectors to resample");
  }
}

Eigen::MatrixXd TaskSpec::effective_matrix() const {
  if (family == Family::Latent) {
    if (!latent) fail(ErrorKind::MissingLatentShared, "latent task without shared factors");
    return theta_mat + latent->u * latent->v.transpose();
  }
  return theta_mat;
}

ActionSet sample_action_set(const FamilyConfig& cfg, Rng& rng) {
  cfg.validate();
  ActionSet set;
  const int a = cfg.num_arms;
  if (cfg.family == Family::KArmed || cfg.family == Family::Histogram) {
    set.features = Eigen::MatrixXd::Identity(a, a);
    set.invariant_count = a;
    return set;
  }
  set.features = gaussian_matrix(a, cfg.d, 1.0 / std::sqrt(static_cast<double>(cfg.d)), rng);
  if (cfg.family == Family::Bilinear || cfg.family == Family::Latent) {
    if (cfg.shares_right_set()) {
      set.right_features = set.features;
    } else {
      const int dr = cfg.right_dim();
      set.right_features = gaussian_matrix(a, dr, 1.0 / std::sqrt(static_cast<double>(dr)), rng);
    }
  }
  set.invariant_count = a - cfg.num_new_actions_per_task;
  return set;
}

LatentShared sample_latent_shared(const FamilyConfig& cfg, Rng& rng) {
  const int d1 = cfg.d;
  const int d2 = cfg.right_dim() > 0 ? cfg.right_dim() : cfg.d;
  LatentShared s;
  s.u = gaussian_matrix(d1, cfg.rank, 1.0 / std::sqrt(static_cast<double>(d1)), rng);
  s.v = gaussian_matrix(d2, cfg.rank, 1.0 / std::sqrt(static_cast<double>(d2)), rng);
  return s;
}

TaskSpec sample_task(const FamilyConfig& cfg, std::shared_ptr<const LatentShared> shared, Rng& rng) {
  TaskSpec task;
  task.family = cfg.family;
  task.noise_std = cfg.noise_std();
  switch (cfg.family) {
    case Family::Linear:
    case Family::NonlinearSigmoid:
    case Family::KArmed:
      task.theta = gaussian_vector(cfg.d, 1.0 / std::sqrt(static_cast<double>(cfg.d)), rng);
      break;
    case Family::Bilinear:
    case Family::Latent: {
      if (cfg.family == Family::Latent && !shared) {
        fail(ErrorKind::MissingLatentShared, "latent family requires shared (U, V)");
      }
      const int d1 = cfg.d;
      const int d2 = cfg.right_dim();
      if (cfg.rank == 1) {
        const Eigen::VectorXd th = gaussian_vector(d1, 1.0 / std::sqrt(static_cast<double>(d1)), rng);
        task.theta_mat = th * th.transpose();
      } else {
        task.theta_mat = Eigen::MatrixXd::Zero(d1, d2);
        for (int i = 0; i < cfg.rank; ++i) {
          const Eigen::VectorXd u = gaussian_vector(d1, 1.0 / std::sqrt(static_cast<double>(d1)), rng);
          const Eigen::VectorXd v = gaussian_vector(d2, 1.0 / std::sqrt(static_cast<double>(d2)), rng);
          task.theta_mat += u * v.transpose();
        }
      }
      if (cfg.family == Family::Latent) task.latent = std::move(shared);
      break;
    }
    case Family::Histogram:
      fail(ErrorKind::InvalidArgument, "histogram tasks come from ingest_ratings_csv");
  }
  return task;
}

TaskSpec make_histogram_task(Eigen::VectorXd means, double noise_std) {
  TaskSpec task;
  task.family = Family::Histogram;
  task.means = std::move(means);
  task.noise_std = noise_std;
  return task;
}

double mean_reward(const TaskSpec& task, const ActionSet& actions, int arm) {
  if (arm < 0 || arm >= actions.num_arms()) {
    fail(ErrorKind::IndexOutOfRange, "arm " + std::to_string(arm) + " outside [0, " +
                                         std::to_string(actions.num_arms()) + ")");
  }
  switch (task.family) {
    case Family::Linear:
      return actions.features.row(arm).dot(task.theta);
    case Family::NonlinearSigmoid:
      return nonlinear_sigmoid(actions.features.row(arm).dot(task.theta));
    case Family::KArmed:
      return task.theta(arm);
    case Family::Bilinear:
    case Family::Latent: {
      if (!actions.right_features) fail(ErrorKind::InvalidArgument, "bilinear task needs right arms");
      const Eigen::MatrixXd m = task.effective_matrix();
      return actions.features.row(arm) * m * actions.right_features->row(arm).transpose();
    }
    case Family::Histogram:
      if (arm >= task.means.size()) fail(ErrorKind::IndexOutOfRange, "histogram arm out of range");
      return task.means(arm);
  }
  return 0.0;
}

Eigen::VectorXd mean_rewards(const TaskSpec& task, const ActionSet& actions) {
  Eigen::VectorXd mu(actions.num_arms());
  for (int a = 0; a < actions.num_arms(); ++a) mu(a) = mean_reward(task, actions, a);
  return mu;
}

double sample_reward(const TaskSpec& task, const ActionSet& actions, int arm, Rng& rng) {
  const double mu = mean_reward(task, actions, arm);
  if (task.noise_std == 0.0) return mu;
  return mu + task.noise_std * rng.normal();
}

int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& values) {
  int best = 0;
  for (int i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = i;
  }
  return best;
}

int argmax_lowest(const std::vector<double>& values) {
  return argmax_lowest(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
}

int optimal_action(const TaskSpec& task, const ActionSet& actions) {
  return argmax_lowest(mean_rewards(task, actions));
}

ActionSet resample_new_actions(const ActionSet& actions, Rng& rng) {
  if (actions.invariant_count >= actions.num_arms()) {
    fail(ErrorKind::NoNewActions, "every arm is invariant");
  }
  ActionSet out = actions;
  const int d = actions.dim();
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (int a = actions.invariant_count; a < actions.num_arms(); ++a) {
    for (int j = 0; j < d; ++j) out.features(a, j) = rng.normal(0.0, sd);
  }
  if (out.right_features) {
    const bool shared = actions.right_features->cols() == actions.features.cols() &&
                        *actions.right_features == actions.features;
    if (shared) {
      out.right_features = out.features;
    } else {
      const int d2 = static_cast<int>(out.right_features->cols());
      const double sd2 = 1.0 / std::sqrt(static_cast<double>(d2));
      for (int a = actions.invariant_count; a < actions.num_arms(); ++a) {
        for (int j = 0; j < d2; ++j) (*out.right_features)(a, j) = rng.normal(0.0, sd2);
      }
    }
  }
  return out;
}

int numerical_rank(const Eigen::MatrixXd& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > tol * s(0)) ++r;
  }
  return r;
}

void validate_task(const TaskSpec& task, int rank_bound) {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::Validation, what);
  };
  require(std::isfinite(task.noise_std) && task.noise_std >= 0.0, "noise_std must be finite and >= 0");
  switch (task.family) {
    case Family::Linear:
    case Family::NonlinearSigmoid:
    case Family::KArmed:
      require(task.theta.size() > 0 && task.theta_mat.size() == 0 && task.means.size() == 0 && !task.latent,
              "vector-parameter family must populate theta only");
      break;
    case Family::Bilinear:
      require(task.theta_mat.size() > 0 && task.theta.size() == 0 && !task.latent,
              "bilinear family must populate theta_mat only");
      require(numerical_rank(task.theta_mat) <= rank_bound, "theta_mat rank exceeds bound");
      break;
    case Family::Latent:
      require(task.theta_mat.size() > 0 && task.latent != nullptr, "latent family needs theta_mat and (U, V)");
      require(numerical_rank(task.theta_mat) <= rank_bound, "theta_mat rank exceeds bound");
      break;
    case Family::Histogram:
      require(task.means.size() > 0 && task.theta.size() == 0, "histogram family must populate means only");
      break;
  }
}

}  // namespace bandit_icl
