#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bandit_icl/agents.hpp"

namespace bandit_icl {

/// Prefix sums of the per-round regret.
std::vector<double> cumulative_regret(const EpisodeResult& episode);
std::vector<double> cumulative_regret(std::span<const double> instantaneous);

struct RegretReport {
  std::string policy;
  std::string environment;
  std::string demonstrator;
  std::size_t num_tasks = 0;
  /// Mean cumulative regret per round, and its standard error (ddof 1).
  std::vector<double> mean;
  std::vector<double> stderr_;
  std::string config_json = "{}";

  double final_mean() const { return mean.empty() ? 0.0 : mean.back(); }
};

/// Pointwise mean and standard error over tasks. Throws EmptyList.
RegretReport aggregate(const std::vector<std::vector<double>>& curves, std::string policy = "",
                       std::string environment = "", std::string demonstrator = "");

/// Cumulative-regret curves of a batch of episodes, aggregated.
RegretReport aggregate_episodes(const std::vector<EpisodeResult>& episodes, std::string policy,
                                std::string environment = "", std::string demonstrator = "");

struct PredictionErrorReport {
  /// Mean squared error of the optimal arm's final prediction, grouped by
  /// which arm was optimal; nullopt when an arm was never optimal.
  std::vector<std::optional<double>> per_arm;
  std::vector<std::size_t> counts;
  double overall = 0.0;
};

/// `predictor` maps a finished episode's trajectory to a predicted reward per arm.
PredictionErrorReport prediction_error(const std::vector<EpisodeResult>& episodes,
                                       const std::function<std::vector<double>(const Trajectory&)>& predictor);

/// Predictor backed by a checkpoint conditioned on the whole trajectory.
std::function<std::vector<double>(const Trajectory&)> checkpoint_predictor(const TransformerParams<float>& params);

struct ActionUsage {
  std::vector<double> first_window;  // pulls per arm in rounds [0, window)
  std::vector<double> last_window;   // pulls per arm in rounds [n - window, n)
  /// Mean number of distinct arms played in rounds [t, n), t = 0..n-1.
  std::vector<double> candidate_set_size;
};

ActionUsage action_usage_stats(const std::vector<EpisodeResult>& episodes, int window);

/// CSV header: round,<policy>_mean,<policy>_stderr,... in the given order.
void write_report_csv(const std::filesystem::path& path, const std::vector<RegretReport>& reports);
std::vector<RegretReport> read_report_csv(const std::filesystem::path& path);
void write_report_svg(const std::filesystem::path& path, const std::vector<RegretReport>& reports,
                      const std::string& title = "cumulative regret");
void emit_report(const std::vector<RegretReport>& reports, const std::filesystem::path& csv_path,
                 const std::filesystem::path& svg_path, const std::string& title = "cumulative regret");

}  // namespace bandit_icl
