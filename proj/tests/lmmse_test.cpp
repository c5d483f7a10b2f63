#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "bandit_icl/demonstrators.hpp"
#include "bandit_icl/error.hpp"
#include "exact_lmmse.hpp"

using namespace bandit_icl;

namespace {

struct Instance {
  int arms;
  std::vector<int> actions;
  std::vector<double> rewards;
};

Instance random_instance(Rng& rng, int max_arms, int max_n) {
  Instance in;
  in.arms = 2 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(max_arms - 1)));
  const int n = in.arms + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(max_n - in.arms + 1)));
  for (int a = 0; a < in.arms; ++a) in.actions.push_back(a);
  while (static_cast<int>(in.actions.size()) < n) {
    in.actions.push_back(static_cast<int>(rng.uniform_index(static_cast<std::size_t>(in.arms))));
  }
  rng.shuffle(std::span<int>(in.actions));
  for (std::size_t t = 0; t < in.actions.size(); ++t) in.rewards.push_back(rng.normal(0.5, 1.0));
  return in;
}

std::vector<double> own_means(const Instance& in) {
  ArmStats st(in.arms);
  for (std::size_t t = 0; t < in.actions.size(); ++t) st.update(in.actions[t], in.rewards[t]);
  std::vector<double> out(static_cast<std::size_t>(in.arms));
  for (int a = 0; a < in.arms; ++a) out[static_cast<std::size_t>(a)] = st.mean(a);
  return out;
}

}  // namespace

TEST(Lmmse, InputsHaveDocumentedStructure) {
  const std::vector<int> acts = {0, 1, 1, 2};
  const std::vector<double> rew = {1.0, 2.0, 4.0, -1.0};
  const auto in = make_lmmse_inputs(acts, rew, 3, 0.3);
  for (Eigen::Index t = 0; t < in.h.rows(); ++t) EXPECT_EQ(in.h.row(t).sum(), 1.0);
  EXPECT_DOUBLE_EQ(in.d_a(1, 1), 0.15);
  EXPECT_EQ(in.d_a(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(in.s_a(1, 2), 3.0 * -1.0);
  EXPECT_EQ(in.s_a, in.s_a.transpose());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(in.s_a);
  EXPECT_LT(svd.singularValues()[1], 1e-12);
}

TEST(Lmmse, UnexploredArmRejected) {
  const std::vector<int> acts = {0, 0};
  const std::vector<double> rew = {1.0, 2.0};
  try {
    bayes_greedy_policy(make_lmmse_inputs(acts, rew, 2, 0.3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnexploredArm);
  }
}

TEST(Lmmse, ZeroPriorGivesZero) {
  const std::vector<int> acts = {0, 1, 1};
  const std::vector<double> rew = {0.0, 0.0, 0.0};
  const auto res = bayes_greedy_policy(make_lmmse_inputs(acts, rew, 2, 0.3));
  EXPECT_EQ(res.mu_hat, Eigen::Vector2d::Zero());
}

TEST(Lmmse, TwoArmsOnePullEachMatchesExact) {
  const std::vector<int> acts = {1, 0};
  const std::vector<double> rew = {0.8, -0.3};
  const auto res = bayes_greedy_policy(make_lmmse_inputs(acts, rew, 2, 0.3));
  const auto ref = exact::lmmse_mu(acts, rew, 2, 0.3, {-0.3, 0.8}, 1.0);
  for (int a = 0; a < 2; ++a) EXPECT_NEAR(res.mu_hat[a], ref[static_cast<std::size_t>(a)], 1e-10);
}

TEST(Lmmse, RandomInstancesMatchExactRational) {
  Rng rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance in = random_instance(rng, 4, 12);
    const auto res = bayes_greedy_policy(make_lmmse_inputs(in.actions, in.rewards, in.arms, 0.3));
    const auto ref = exact::lmmse_mu(in.actions, in.rewards, in.arms, 0.3, own_means(in), 1.0);
    for (int a = 0; a < in.arms; ++a) {
      ASSERT_NEAR(res.mu_hat[a], ref[static_cast<std::size_t>(a)], 1e-10) << "trial " << trial;
    }
    EXPECT_EQ(res.arm, argmax_lowest(res.mu_hat));
  }
}

TEST(Lmmse, LinearInYWithFixedPrior) {
  Rng rng(4);
  const Instance in = random_instance(rng, 4, 10);
  const auto prior = own_means(in);
  auto scaled = in.rewards;
  for (double& r : scaled) r *= 2.5;
  const auto a = bayes_greedy_policy(make_lmmse_inputs(in.actions, in.rewards, in.arms, 0.3, prior));
  const auto b = bayes_greedy_policy(make_lmmse_inputs(in.actions, scaled, in.arms, 0.3, prior));
  EXPECT_LT((b.mu_hat - 2.5 * a.mu_hat).norm(), 1e-10);
}

TEST(Lmmse, InvariantToJointRowPermutation) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(rng, 4, 12);
    std::vector<std::size_t> perm(in.actions.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    Instance p = in;
    for (std::size_t t = 0; t < perm.size(); ++t) {
      p.actions[t] = in.actions[perm[t]];
      p.rewards[t] = in.rewards[perm[t]];
    }
    const auto prior = own_means(in);
    const auto a = bayes_greedy_policy(make_lmmse_inputs(in.actions, in.rewards, in.arms, 0.3, prior));
    const auto b = bayes_greedy_policy(make_lmmse_inputs(p.actions, p.rewards, p.arms, 0.3, prior));
    EXPECT_LT((a.mu_hat - b.mu_hat).norm(), 1e-10);
  }
}

TEST(Lmmse, BayesGreedyPolicyExploresThenExploits) {
  BayesGreedyPolicy policy(3, 0.3, {});
  Rng rng(1);
  std::set<int> seen;
  for (int t = 0; t < 60 && seen.size() < 3; ++t) {
    const int a = policy.select(rng);
    seen.insert(a);
    policy.observe(a, a == 2 ? 1.0 : 0.0);
  }
  ASSERT_EQ(seen.size(), 3u);
  for (int t = 0; t < 5; ++t) {
    const int a = policy.select(rng);
    EXPECT_EQ(a, 2);
    policy.observe(a, 1.0);
  }
}
