#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "bandit_icl/demonstrators.hpp"
#include "bandit_icl/error.hpp"

using namespace bandit_icl;

namespace {

Trajectory make_traj(std::vector<int> actions, std::vector<double> rewards, int arms) {
  Trajectory t;
  t.actions = std::move(actions);
  t.rewards = std::move(rewards);
  t.true_means.assign(static_cast<std::size_t>(arms), 0.0);
  return t;
}

// Largest principal angle between the column spans of two orthonormal bases.
double max_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.transpose() * b);
  const double smallest = std::min(1.0, svd.singularValues().minCoeff());
  return std::acos(smallest);
}

ActionSet random_arms(int arms, int d, Rng& rng) {
  ActionSet set;
  set.features.resize(arms, d);
  for (int a = 0; a < arms; ++a)
    for (int j = 0; j < d; ++j) set.features(a, j) = rng.normal() / std::sqrt(static_cast<double>(d));
  return set;
}

// Noiseless trajectory pulling every arm `reps` times in order.
Trajectory noiseless_sweep(const ActionSet& set, const Eigen::VectorXd& theta, int reps) {
  Trajectory t;
  for (int r = 0; r < reps; ++r)
    for (int a = 0; a < set.num_arms(); ++a) {
      t.actions.push_back(a);
      t.rewards.push_back(set.features.row(a).dot(theta));
    }
  t.true_means.assign(static_cast<std::size_t>(set.num_arms()), 0.0);
  return t;
}

}  // namespace

TEST(ThompsonSampling, WellEstimatedArmBeatsUnpulledPrior) {
  ArmStats st(2);
  st.counts[0] = 1000000;
  st.reward_sums[0] = 1e7;
  Rng rng(1);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += ts_step(st, 1.0, rng) == 0;
  EXPECT_GT(hits / 1e4, 0.999);
}

TEST(ThompsonSampling, VanishingVarianceIsGreedy) {
  ArmStats st(4);
  const std::array<double, 4> r = {0.2, 0.9, -0.4, 0.85};
  for (int a = 0; a < 4; ++a) st.update(a, r[static_cast<std::size_t>(a)]);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(ts_step(st, 1e-14, rng), 1);
}

TEST(ThompsonSampling, SymmetricArmsSplitEvenly) {
  ArmStats st(2);
  Rng rng(3);
  int zero = 0;
  for (int i = 0; i < 10000; ++i) zero += ts_step(st, 1.0, rng) == 0;
  EXPECT_NEAR(zero / 1e4, 0.5, 0.02);
}

TEST(LinUcb, NoDataPicksLongestArm) {
  Eigen::MatrixXd arms(3, 2);
  arms << 1.0, 0.0, 0.5, 1.5, -1.0, -1.0;
  LinUcbState st(2, 1.0, 1.0);
  Rng rng(0);
  EXPECT_EQ(st.theta_hat(), Eigen::Vector2d::Zero());
  const auto b = linucb_scores(st, arms);
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(b(a), arms.row(a).norm(), 1e-12);
  EXPECT_EQ(linucb_step(st, arms, rng), 1);
}

TEST(LinUcb, NoiselessOlsRecoversOptimalArm) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const ActionSet set = random_arms(10, 3, rng);
    Eigen::VectorXd theta(3);
    for (int j = 0; j < 3; ++j) theta(j) = rng.normal();
    LinUcbState st(3, 0.0, 1e-10);
    for (int a = 0; a < set.num_arms(); ++a) {
      st.update(set.features.row(a).transpose(), set.features.row(a).dot(theta));
    }
    EXPECT_EQ(linucb_step(st, set, rng), argmax_lowest(Eigen::VectorXd(set.features * theta)));
  }
}

TEST(LinUcb, HugeTemperatureIsUniform) {
  Eigen::MatrixXd arms(4, 2);
  arms << 1, 0, 0, 1, 2, 2, -1, 0.5;
  LinUcbState st(2, 1.0, 1.0, 1e9);
  Rng rng(5);
  std::array<int, 4> counts{};
  for (int i = 0; i < 10000; ++i) ++counts[static_cast<std::size_t>(linucb_step(st, arms, rng))];
  double tv = 0.0;
  for (int c : counts) tv += std::abs(c / 1e4 - 0.25);
  EXPECT_LT(0.5 * tv, 0.02);
}

TEST(LinUcb, TinyTemperatureMatchesHardArgmax) {
  Rng rng(6);
  const ActionSet set = random_arms(8, 2, rng);
  LinUcbState soft(2, 1.0, 1.0, 1e-6);
  LinUcbState hard(2, 1.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    const int a = static_cast<int>(rng.uniform_index(8));
    const double r = rng.normal();
    soft.update(set.features.row(a).transpose(), r);
    hard.update(set.features.row(a).transpose(), r);
  }
  const int expected = linucb_step(hard, set, rng);
  std::vector<int> counts(8, 0);
  for (int i = 0; i < 1000; ++i) ++counts[static_cast<std::size_t>(linucb_step(soft, set, rng))];
  EXPECT_EQ(argmax_lowest(counts.size() ? std::vector<double>(counts.begin(), counts.end()) : std::vector<double>{}),
            expected);
}

TEST(LinUcb, UcbDominatesPointEstimate) {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const ActionSet set = random_arms(6, 3, rng);
    LinUcbState st(3, 0.5 * trial / 10.0, 1.0);
    for (int t = 0; t < trial; ++t) {
      const int a = static_cast<int>(rng.uniform_index(6));
      st.update(set.features.row(a).transpose(), rng.normal());
    }
    const Eigen::VectorXd b = linucb_scores(st, set.features);
    const Eigen::VectorXd point = set.features * st.theta_hat();
    for (int a = 0; a < 6; ++a) EXPECT_GE(b(a), point(a) - 1e-12);
  }
}

TEST(LinUcb, GramStaysSymmetricPositiveDefinite) {
  Rng rng(8);
  const ActionSet set = random_arms(5, 4, rng);
  LinUcbState st(4, 1.0, 1.0);
  for (int t = 0; t < 40; ++t) st.update(set.features.row(t % 5).transpose(), rng.normal());
  EXPECT_LT((st.gram - st.gram.transpose()).norm(), 1e-12);
  EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(st.gram).info(), Eigen::Success);
}

TEST(LinUcb, ZeroRidgeWithoutDataIsSingular) {
  Eigen::MatrixXd arms = Eigen::MatrixXd::Identity(2, 2);
  LinUcbState st(2, 1.0, 0.0);
  Rng rng(0);
  try {
    linucb_step(st, arms, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularGram);
  }
}

TEST(Uniform, SingleArm) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(uniform_step(1, rng), 0);
}

TEST(Uniform, FrequenciesAreFlat) {
  Rng rng(2);
  std::array<int, 4> counts{};
  for (int i = 0; i < 100000; ++i) ++counts[static_cast<std::size_t>(uniform_step(4, rng))];
  for (int c : counts) EXPECT_NEAR(c / 1e5, 0.25, 0.01);
}

TEST(Uniform, SeededSequenceRepeats) {
  Rng a(99), b(99);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(uniform_step(7, a), uniform_step(7, b));
}

TEST(ApproxOptimal, Examples) {
  EXPECT_EQ(approx_optimal_action(make_traj({0, 1, 0}, {1, 0, 1}, 2)), 0);
  EXPECT_EQ(approx_optimal_action(make_traj({0, 1, 1}, {0.5, 0.5, 0.5}, 2)), 1);
  EXPECT_EQ(approx_optimal_action(make_traj({2, 2, 2}, {-5, -4, -6}, 4)), 2);
  // Equal means and counts: lower index.
  EXPECT_EQ(approx_optimal_action(make_traj({3, 1}, {0.2, 0.2}, 4)), 1);
}

TEST(ApproxOptimal, EmptyTrajectory) {
  try {
    approx_optimal_action(make_traj({}, {}, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyTrajectory);
  }
}

TEST(MLin, RankOneFamilySpansSharedDirection) {
  // Orthonormal arms pulled equally keep every ridge estimate parallel to theta.
  Rng rng(21);
  ActionSet set;
  set.features = Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd v(4);
  v << 1.0, -2.0, 0.5, 3.0;
  v.normalize();
  std::vector<Trajectory> trajs;
  for (int m = 0; m < 20; ++m) trajs.push_back(noiseless_sweep(set, rng.normal(0.0, 2.0) * v, 3));
  const std::vector<ActionSet> sets = {set};
  const MLinModel model = mlin_fit(trajs, sets, 1);
  EXPECT_LT(max_principal_angle(model.b_hat, v), 1e-6);
  EXPECT_LT((model.b_hat.transpose() * model.b_hat - Eigen::MatrixXd::Identity(1, 1)).norm(), 1e-12);
}

TEST(MLin, RankTwoFamilyRecoversSubspace) {
  Rng rng(22);
  const ActionSet set = random_arms(12, 5, rng);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(5, 2);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 2; ++j) basis(i, j) = rng.normal();
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(basis).householderQ() * Eigen::MatrixXd::Identity(5, 2);
  std::vector<Trajectory> trajs;
  for (int m = 0; m < 30; ++m) {
    const Eigen::Vector2d w(rng.normal(), rng.normal());
    trajs.push_back(noiseless_sweep(set, q * w, 2));
  }
  const std::vector<ActionSet> sets = {set};
  const MLinModel model = mlin_fit(trajs, sets, 2);
  // Every task pulls the same arms, so each ridge estimate is (G + I)^-1 G theta_m
  // and the stacked matrix spans (G + I)^-1 G span(q).
  const Eigen::MatrixXd g = 2.0 * set.features.transpose() * set.features;
  const Eigen::MatrixXd shrunk = (g + Eigen::MatrixXd::Identity(5, 5)).ldlt().solve(g * q);
  const Eigen::MatrixXd expected = Eigen::HouseholderQR<Eigen::MatrixXd>(shrunk).householderQ() * Eigen::MatrixXd::Identity(5, 2);
  EXPECT_LT(max_principal_angle(model.b_hat, expected), 1e-4);
}

TEST(MLin, FullRankMatchesPlainRidge) {
  Rng rng(23);
  const ActionSet set = random_arms(6, 3, rng);
  std::vector<Trajectory> trajs;
  for (int m = 0; m < 5; ++m) {
    Eigen::VectorXd theta(3);
    for (int j = 0; j < 3; ++j) theta(j) = rng.normal();
    trajs.push_back(noiseless_sweep(set, theta, 1));
  }
  const std::vector<ActionSet> sets = {set};
  const MLinModel model = mlin_fit(trajs, sets, 3);
  EXPECT_LT((model.b_hat.transpose() * model.b_hat - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-12);

  ArmStats st(6);
  LinUcbState greedy(3, 0.0, 1.0);
  for (int t = 0; t < 9; ++t) {
    const int a = static_cast<int>(rng.uniform_index(6));
    const double r = rng.normal();
    st.update(a, r);
    greedy.update(set.features.row(a).transpose(), r);
    EXPECT_LT((mlin_theta(model, st, set) - greedy.theta_hat()).norm(), 1e-10);
    EXPECT_EQ(mlin_step(model, st, set), linucb_step(greedy, set, rng));
  }
}

TEST(MLin, ColdStartAndExactReducedSolve) {
  Rng rng(24);
  const ActionSet set = random_arms(10, 4, rng);
  MLinModel model;
  model.b_hat = Eigen::MatrixXd::Zero(4, 2);
  model.b_hat(0, 0) = 1.0;
  model.b_hat(2, 1) = 1.0;
  model.lambda = 1e-12;
  ArmStats st(10);
  EXPECT_EQ(mlin_step(model, st, set), 0);
  const Eigen::VectorXd theta = model.b_hat * Eigen::Vector2d(1.3, -0.7);
  for (int a = 0; a < 10; ++a) st.update(a, set.features.row(a).dot(theta));
  EXPECT_EQ(mlin_step(model, st, set), argmax_lowest(Eigen::VectorXd(set.features * theta)));
}

TEST(MLin, TooFewTasks) {
  Rng rng(25);
  const ActionSet set = random_arms(5, 3, rng);
  std::vector<Trajectory> trajs = {noiseless_sweep(set, Eigen::Vector3d(1, 0, 0), 1)};
  const std::vector<ActionSet> sets = {set};
  try {
    mlin_fit(trajs, sets, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
}

TEST(Demonstrators, RegretIsSublinear) {
  FamilyConfig cfg;
  cfg.family = Family::Linear;
  cfg.d = 2;
  cfg.num_arms = 10;
  cfg.horizon = 200;
  Rng rng(2024);
  double ts_first = 0, ts_second = 0, ucb_first = 0, ucb_second = 0;
  for (int m = 0; m < 50; ++m) {
    const ActionSet set = sample_action_set(cfg, rng);
    const TaskSpec task = sample_task(cfg, nullptr, rng);
    const Eigen::VectorXd mu = mean_rewards(task, set);
    const double best = mu.maxCoeff();
    ThompsonPolicy ts(10, cfg.noise_variance);
    LinUcbPolicy ucb(set, 1.0, 1.0);
    for (int t = 0; t < 200; ++t) {
      for (BanditPolicy* p : std::array<BanditPolicy*, 2>{&ts, &ucb}) {
        const int a = p->select(rng);
        p->observe(a, sample_reward(task, set, a, rng));
        const double r = best - mu(a);
        double& slot = p == &ts ? (t < 100 ? ts_first : ts_second) : (t < 100 ? ucb_first : ucb_second);
        slot += r;
      }
    }
  }
  EXPECT_LT(ts_second, ts_first);
  EXPECT_LT(ucb_second, ucb_first);
}
