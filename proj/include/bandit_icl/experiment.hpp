#pragma once

// Config-driven experiment pipeline: gen-data -> train -> eval/baseline -> report.

#include <filesystem>
#include <string>
#include <vector>

#include "bandit_icl/agents.hpp"
#include "bandit_icl/datagen.hpp"
#include "bandit_icl/training.hpp"

namespace bandit_icl {

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path out_dir = "run";
  std::uint64_t num_pretrain_tasks = 1000;
  std::uint64_t num_test_tasks = 100;
  int trajectories_per_task = 1;
  DatasetFormat dataset_format = DatasetFormat::Binary;

  FamilyConfig env;
  std::filesystem::path ratings_csv;
  int ratings_min_interactions = 20;
  int test_users = 0;

  DemonstratorConfig demonstrator;

  TransformerConfig model;
  LossMode loss = LossMode::PreDeToR;
  DptTarget dpt_target = DptTarget::ApproxOptimal;
  double validation_fraction = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  std::vector<std::string> policies = {"predetor", "predetor_tau"};
  double tau = 0.05;
  std::vector<std::string> baselines = {"ts", "linucb"};
  int estr_explore_rounds = -1;
  double estr_lambda_perp = 1.0;
  int mlin_k = 0;  // 0: feature dimension
  double sigma_theta_sq = 1.0;
  bool prediction_error = false;

  /// Sets the run seed and the environment and model seeds derived from it.
  void set_seed(std::uint64_t s) {
    seed = s;
    env.seed = s;
    model.seed = s;
  }

  /// Canonical text of every setting (workers and output paths excluded).
  std::string canonical() const;
  void validate() const;
};

/// Flat typed key = value file with [section] headers; '#' starts a comment.
/// Unknown keys, duplicates and malformed values are rejected with the key path.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Artifact locations inside out_dir.
struct RunPaths {
  std::filesystem::path root;
  std::filesystem::path pretrain_data() const { return root / "pretrain.dataset"; }
  std::filesystem::path test_data() const { return root / "test.dataset"; }
  std::filesystem::path checkpoint() const { return root / "model.ckpt"; }
  std::filesystem::path curves_dir() const { return root / "curves"; }
  std::filesystem::path curve(const std::string& label) const { return curves_dir() / (label + ".csv"); }
  std::filesystem::path report_csv() const { return root / "report.csv"; }
  std::filesystem::path report_svg() const { return root / "report.svg"; }
  std::filesystem::path prediction_error() const { return root / "prediction_error.json"; }
  std::filesystem::path manifest() const { return root / "manifest.json"; }
};

void stage_gen_data(const ExperimentConfig& cfg);
void stage_train(const ExperimentConfig& cfg);
void stage_eval(const ExperimentConfig& cfg);
void stage_baseline(const ExperimentConfig& cfg);
void stage_report(const ExperimentConfig& cfg);
/// All stages in order.
void run_experiment(const ExperimentConfig& cfg);

/// Rewrites manifest.json: config, seed, stages run, and the SHA-256 of every artifact present.
void write_run_manifest(const ExperimentConfig& cfg, const std::vector<std::string>& stages);

/// Per-task cumulative regret curves, one row per task.
void write_curves(const std::filesystem::path& path, const std::vector<EpisodeResult>& episodes);
std::vector<std::vector<double>> read_curves(const std::filesystem::path& path);

}  // namespace bandit_icl
