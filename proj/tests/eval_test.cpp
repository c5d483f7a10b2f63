#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bandit_icl/digest.hpp"
#include "bandit_icl/error.hpp"
#include "bandit_icl/eval.hpp"
#include "bandit_icl/training.hpp"

using namespace bandit_icl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(BANDIT_ICL_TEST_DATA_DIR) / "eval_scratch";
  fs::create_directories(dir);
  return dir / name;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EpisodeResult episode_from(std::vector<int> actions, std::vector<double> means) {
  EpisodeResult e;
  e.trajectory.actions = std::move(actions);
  e.trajectory.rewards.assign(e.trajectory.actions.size(), 0.0);
  e.trajectory.true_means = std::move(means);
  e.trajectory.optimal_action = argmax_lowest(e.trajectory.true_means);
  const double best = e.trajectory.true_means[static_cast<std::size_t>(e.trajectory.optimal_action)];
  for (int a : e.trajectory.actions) e.regret.push_back(best - e.trajectory.true_means[static_cast<std::size_t>(a)]);
  return e;
}

}  // namespace

TEST(CumulativeRegret, Examples) {
  const auto zero = cumulative_regret(episode_from({1, 1, 1}, {0.0, 1.0}));
  EXPECT_EQ(zero, (std::vector<double>{0, 0, 0}));
  const std::vector<double> gaps(5, 0.25);
  EXPECT_EQ(cumulative_regret(gaps), (std::vector<double>{0.25, 0.5, 0.75, 1.0, 1.25}));
}

TEST(CumulativeRegret, RecomputedFromTrajectory) {
  FamilyConfig cfg;
  cfg.family = Family::Linear;
  cfg.d = 3;
  cfg.num_arms = 6;
  cfg.horizon = 40;
  const TaskWorld world = make_world(cfg);
  BaselineSpec spec;
  spec.name = "uniform";
  for (const EpisodeResult& e : run_baseline_on_tests(spec, world, 10, 1)) {
    const auto& t = e.trajectory;
    const double best = *std::max_element(t.true_means.begin(), t.true_means.end());
    double running = 0.0;
    const auto cum = cumulative_regret(e);
    ASSERT_EQ(cum.size(), t.actions.size());
    for (std::size_t s = 0; s < t.actions.size(); ++s) {
      running += best - t.true_means[static_cast<std::size_t>(t.actions[s])];
      EXPECT_NEAR(cum[s], running, 1e-12);
      EXPECT_GE(cum[s], s ? cum[s - 1] : 0.0);
    }
  }
}

TEST(Aggregate, TwoPointStatistics) {
  const auto r = aggregate({{0, 0, 0}, {2, 2, 2}}, "p");
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_DOUBLE_EQ(r.mean[t], 1.0);
    EXPECT_DOUBLE_EQ(r.stderr_[t], 1.0);
  }
  const auto same = aggregate({{1, 2}, {1, 2}, {1, 2}});
  EXPECT_EQ(same.stderr_, (std::vector<double>{0, 0}));
  const auto single = aggregate({{3, 4}});
  EXPECT_EQ(single.stderr_, (std::vector<double>{0, 0}));
  EXPECT_EQ(single.num_tasks, 1u);
}

TEST(Aggregate, Errors) {
  try {
    aggregate({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyList);
  }
  EXPECT_THROW(aggregate({{1, 2}, {1}}), Error);
}

TEST(Aggregate, MonteCarloStandardError) {
  // Random-walk curves: round t has variance t + 1.
  Rng rng(5);
  const int m = 1000, n = 20;
  std::vector<std::vector<double>> curves(m);
  for (auto& c : curves) {
    double s = 0;
    for (int t = 0; t < n; ++t) c.push_back(s += rng.normal());
  }
  const auto r = aggregate(curves);
  for (int t = 0; t < n; ++t) {
    const double analytic = std::sqrt((t + 1.0) / m);
    EXPECT_NEAR(r.stderr_[static_cast<std::size_t>(t)], analytic, 0.1 * analytic);
  }
}

TEST(Aggregate, PermutationInvariant) {
  Rng rng(6);
  std::vector<std::vector<double>> curves(30, std::vector<double>(8));
  for (auto& c : curves)
    for (double& v : c) v = rng.uniform();
  const auto a = aggregate(curves);
  std::reverse(curves.begin(), curves.end());
  rng.shuffle(std::span<std::vector<double>>(curves));
  const auto b = aggregate(curves);
  for (std::size_t t = 0; t < 8; ++t) {
    EXPECT_NEAR(a.mean[t], b.mean[t], 1e-14);
    EXPECT_NEAR(a.stderr_[t], b.stderr_[t], 1e-14);
  }
}

TEST(PredictionError, OracleAndConstantOffset) {
  std::vector<EpisodeResult> eps = {episode_from({0, 1}, {0.5, 0.1, 0.2}), episode_from({2}, {0.0, 0.3, 0.9}),
                                    episode_from({1, 1}, {0.4, 0.1, 0.8})};
  const auto oracle = prediction_error(eps, [](const Trajectory& t) { return t.true_means; });
  EXPECT_EQ(oracle.overall, 0.0);
  ASSERT_TRUE(oracle.per_arm[0]);
  EXPECT_EQ(*oracle.per_arm[0], 0.0);
  EXPECT_FALSE(oracle.per_arm[1]);
  EXPECT_EQ(oracle.counts[2], 2u);

  const double c = 0.3;
  const auto off = prediction_error(eps, [&](const Trajectory& t) {
    auto p = t.true_means;
    p[static_cast<std::size_t>(t.optimal_action)] += c;
    return p;
  });
  EXPECT_NEAR(*off.per_arm[0], c * c, 1e-15);
  EXPECT_NEAR(*off.per_arm[2], c * c, 1e-15);
  EXPECT_NEAR(off.overall, c * c, 1e-15);

  std::reverse(eps.begin(), eps.end());
  const auto rev = prediction_error(eps, [&](const Trajectory& t) {
    auto p = t.true_means;
    p[static_cast<std::size_t>(t.optimal_action)] += c;
    return p;
  });
  EXPECT_EQ(rev.per_arm, off.per_arm);
}

TEST(PredictionError, TrainedBeatsRandomCheckpoint) {
  FamilyConfig env;
  env.family = Family::Linear;
  env.d = 2;
  env.num_arms = 4;
  env.horizon = 10;
  env.seed = 3;
  const TaskWorld world = make_world(env);
  GenerateOptions gen;
  gen.num_tasks = 2000;
  const auto data = generate_dataset(world, DemonstratorConfig{}, gen).trajectories;
  TransformerConfig cfg;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_embd = 16;
  cfg.num_arms = 4;
  cfg.context_len = 11;
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 32;
  cfg.max_epochs = 10;
  cfg.seed = 1;
  const auto trained = train(data, cfg, TrainOptions{}).params;
  const auto fresh = TransformerParams<float>::init(cfg, 99);
  const PolicyKind pol{PolicyVariant::PreDeToR};
  const auto err_trained = prediction_error(run_model_on_tests(trained, pol, world, 200, 1), checkpoint_predictor(trained));
  const auto err_fresh = prediction_error(run_model_on_tests(fresh, pol, world, 200, 1), checkpoint_predictor(fresh));
  EXPECT_LT(err_trained.overall, err_fresh.overall);
}

TEST(ActionUsage, SingleArmAndFullWindow) {
  std::vector<EpisodeResult> eps(4, episode_from({2, 2, 2, 2, 2}, {0, 0, 1}));
  const auto u = action_usage_stats(eps, 5);
  for (double c : u.candidate_set_size) EXPECT_EQ(c, 1.0);
  EXPECT_EQ(u.first_window, u.last_window);
  EXPECT_EQ(u.first_window[2], 20.0);
}

TEST(ActionUsage, UniformMatchesCouponCollector) {
  Rng rng(8);
  const int n = 30, arms = 5, m = 4000;
  std::vector<EpisodeResult> eps;
  for (int i = 0; i < m; ++i) {
    std::vector<int> acts;
    for (int t = 0; t < n; ++t) acts.push_back(static_cast<int>(rng.uniform_index(arms)));
    eps.push_back(episode_from(acts, std::vector<double>(arms, 0.0)));
  }
  const auto u = action_usage_stats(eps, 10);
  double total = 0;
  for (double f : u.first_window) total += f;
  EXPECT_EQ(total, 10.0 * m);
  for (int t = 0; t < n; ++t) {
    const int k = n - t;  // draws in [t, n)
    const double expected = arms * (1.0 - std::pow(1.0 - 1.0 / arms, k));
    EXPECT_NEAR(u.candidate_set_size[static_cast<std::size_t>(t)], expected, 0.05) << "t " << t;
    EXPECT_LE(u.candidate_set_size[static_cast<std::size_t>(t)], std::min(arms, k) + 1e-12);
  }
}

TEST(Report, CsvRoundTripAndOrder) {
  RegretReport a = aggregate({{0.1, 0.3, 1.0 / 3.0}, {0.2, 0.5, 0.7}}, "predetor");
  RegretReport b = aggregate({{1, 2, 3}}, "ts");
  const fs::path p = scratch("r.csv");
  write_report_csv(p, {a, b});
  const std::string text = read_file(p);
  EXPECT_EQ(text.substr(0, text.find('\n')), "round,predetor_mean,predetor_stderr,ts_mean,ts_stderr");
  const auto back = read_report_csv(p);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].policy, "predetor");
  EXPECT_EQ(back[1].policy, "ts");
  EXPECT_EQ(back[0].mean, a.mean);
  EXPECT_EQ(back[0].stderr_, a.stderr_);
  EXPECT_EQ(back[1].mean, b.mean);
}

TEST(Report, EmptyReport) {
  write_report_csv(scratch("empty.csv"), {});
  EXPECT_EQ(read_file(scratch("empty.csv")), "round\n");
  write_report_svg(scratch("empty.svg"), {});
  const std::string svg = read_file(scratch("empty.svg"));
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_EQ(svg.find("<polyline"), std::string::npos);
}

TEST(Report, ByteReproducible) {
  const RegretReport a = aggregate({{0.0, 1.0, 1.5}, {0.5, 0.5, 2.5}}, "predetor_tau");
  const RegretReport b = aggregate({{1.0, 2.0, 3.0}, {0.0, 2.0, 2.0}}, "linucb");
  emit_report({a, b}, scratch("x1.csv"), scratch("x1.svg"));
  emit_report({a, b}, scratch("x2.csv"), scratch("x2.svg"));
  EXPECT_EQ(file_digest(scratch("x1.csv")), file_digest(scratch("x2.csv")));
  EXPECT_EQ(file_digest(scratch("x1.svg")), file_digest(scratch("x2.svg")));
  const std::string svg = read_file(scratch("x1.svg"));
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '\n') > 0, true);
  std::size_t lines = 0;
  for (std::size_t at = svg.find("<polyline"); at != std::string::npos; at = svg.find("<polyline", at + 1)) ++lines;
  EXPECT_EQ(lines, 2u);
}
