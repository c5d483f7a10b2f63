#include <algorithm>
#include <cmath>
#include <set>

#include "bandit_icl/error.hpp"
#include "bandit_icl/eval.hpp"

namespace bandit_icl {

std::vector<double> cumulative_regret(std::span<const double> instantaneous) {
  std::vector<double> out(instantaneous.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < instantaneous.size(); ++t) {
    acc += instantaneous[t];
    out[t] = acc;
  }
  return out;
}

std::vector<double> cumulative_regret(const EpisodeResult& episode) { return cumulative_regret(episode.regret); }

RegretReport aggregate(const std::vector<std::vector<double>>& curves, std::string policy, std::string environment,
                       std::string demonstrator) {
  if (curves.empty()) fail(ErrorKind::EmptyList, "aggregate over zero curves");
  const std::size_t n = curves.front().size();
  for (const auto& c : curves) {
    if (c.size() != n) fail(ErrorKind::ShapeMismatch, "regret curves differ in length");
  }
  RegretReport rep;
  rep.policy = std::move(policy);
  rep.environment = std::move(environment);
  rep.demonstrator = std::move(demonstrator);
  rep.num_tasks = curves.size();
  rep.mean.assign(n, 0.0);
  rep.stderr_.assign(n, 0.0);
  const double m = static_cast<double>(curves.size());
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0.0;
    for (const auto& c : curves) sum += c[t];
    const double mean = sum / m;
    rep.mean[t] = mean;
    if (curves.size() > 1) {
      double ss = 0.0;
      for (const auto& c : curves) ss += (c[t] - mean) * (c[t] - mean);
      rep.stderr_[t] = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
    }
  }
  return rep;
}

RegretReport aggregate_episodes(const std::vector<EpisodeResult>& episodes, std::string policy,
                                std::string environment, std::string demonstrator) {
  std::vector<std::vector<double>> curves;
  curves.reserve(episodes.size());
  for (const auto& e : episodes) curves.push_back(cumulative_regret(e));
  return aggregate(curves, std::move(policy), std::move(environment), std::move(demonstrator));
}

PredictionErrorReport prediction_error(const std::vector<EpisodeResult>& episodes,
                                       const std::function<std::vector<double>(const Trajectory&)>& predictor) {
  PredictionErrorReport rep;
  if (episodes.empty()) return rep;
  const std::size_t arms = episodes.front().trajectory.true_means.size();
  std::vector<double> sums(arms, 0.0);
  rep.counts.assign(arms, 0);
  double total = 0.0;
  for (const auto& e : episodes) {
    const Trajectory& t = e.trajectory;
    if (t.true_means.size() != arms) fail(ErrorKind::ShapeMismatch, "episodes differ in arm count");
    const std::vector<double> pred = predictor(t);
    if (pred.size() != arms) fail(ErrorKind::ShapeMismatch, "predictor returned the wrong length");
    const auto best = static_cast<std::size_t>(t.optimal_action);
    const double err = pred[best] - t.true_means[best];
    sums[best] += err * err;
    total += err * err;
    ++rep.counts[best];
  }
  rep.per_arm.resize(arms);
  for (std::size_t a = 0; a < arms; ++a) {
    if (rep.counts[a] > 0) rep.per_arm[a] = sums[a] / static_cast<double>(rep.counts[a]);
  }
  rep.overall = total / static_cast<double>(episodes.size());
  return rep;
}

std::function<std::vector<double>(const Trajectory&)> checkpoint_predictor(const TransformerParams<float>& params) {
  return [&params](const Trajectory& t) { return predict_rewards(params, t.actions, t.rewards); };
}

ActionUsage action_usage_stats(const std::vector<EpisodeResult>& episodes, int window) {
  ActionUsage out;
  if (episodes.empty()) return out;
  const int n = episodes.front().trajectory.horizon();
  const std::size_t arms = episodes.front().trajectory.true_means.size();
  if (window < 0 || window > n) fail(ErrorKind::Validation, "window must be in [0, n]");
  out.first_window.assign(arms, 0.0);
  out.last_window.assign(arms, 0.0);
  out.candidate_set_size.assign(static_cast<std::size_t>(n), 0.0);
  for (const auto& e : episodes) {
    const auto& acts = e.trajectory.actions;
    if (static_cast<int>(acts.size()) != n) fail(ErrorKind::ShapeMismatch, "episodes differ in horizon");
    for (int t = 0; t < window; ++t) {
      out.first_window[static_cast<std::size_t>(acts[static_cast<std::size_t>(t)])] += 1.0;
      out.last_window[static_cast<std::size_t>(acts[static_cast<std::size_t>(n - window + t)])] += 1.0;
    }
    std::set<int> seen;
    for (int t = n - 1; t >= 0; --t) {
      seen.insert(acts[static_cast<std::size_t>(t)]);
      out.candidate_set_size[static_cast<std::size_t>(t)] += static_cast<double>(seen.size());
    }
  }
  for (double& c : out.candidate_set_size) c /= static_cast<double>(episodes.size());
  return out;
}

}  // namespace bandit_icl
