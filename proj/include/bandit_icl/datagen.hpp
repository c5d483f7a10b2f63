#pragma once

// Demonstrator rollouts over sampled tasks, dataset files, and ratings-CSV
// ingestion for the histogram family.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bandit_icl/demonstrators.hpp"
#include "bandit_icl/env.hpp"
#include "bandit_icl/trajectory.hpp"

namespace bandit_icl {

enum class DemonstratorKind { Thompson, LinUcb, SoftLinUcb, Uniform };

std::string to_string(DemonstratorKind kind);
DemonstratorKind parse_demonstrator(std::string_view name);

struct DemonstratorConfig {
  DemonstratorKind kind = DemonstratorKind::Thompson;
  double alpha = 1.0;
  double lambda = 1.0;
  double tau = 0.05;
  /// Variance used inside Thompson sampling; <= 0 means the family's noise variance.
  double ts_sigma_sq = -1.0;
};

std::unique_ptr<BanditPolicy> make_demonstrator(const DemonstratorConfig& cfg, const ActionSet& actions,
                                                double noise_variance);

/// n rounds of select -> reward -> update, in order.
Trajectory collect_trajectory(const TaskSpec& task, const ActionSet& actions, BanditPolicy& demonstrator, int n,
                              Rng& rng, std::uint64_t task_id = 0);

// ---------------------------------------------------------------------------
// Task worlds: everything needed to regenerate any task from (seed, task_id).

struct RatingsData {
  std::vector<std::string> item_ids;  // arm order
  std::vector<std::string> user_ids;  // one per task
  std::vector<TaskSpec> tasks;
  double rating_min = 0.0;
  double rating_max = 0.0;
};

struct TaskWorld {
  FamilyConfig cfg;
  ActionSet base_actions;
  std::shared_ptr<const LatentShared> latent;
  /// Histogram family: users split into pretraining and test pools.
  std::vector<TaskSpec> histogram_train;
  std::vector<TaskSpec> histogram_test;
};

struct TaskInstance {
  std::uint64_t task_id = 0;
  TaskSpec task;
  ActionSet actions;
};

/// Test task ids live in a disjoint id range from pretraining ids.
inline constexpr std::uint64_t kTestTaskIdBase = 1ULL << 40;

TaskWorld make_world(const FamilyConfig& cfg, const RatingsData* ratings = nullptr, int test_users = 0);

/// Deterministic in (world, task_id). Draws theta and, when configured, the
/// per-task new arms from the stream derive_seed(cfg.seed, task_id).
TaskInstance make_task(const TaskWorld& world, std::uint64_t task_id);

/// Generator for everything that happens after the task is drawn (rewards,
/// demonstrator randomness) for task `task_id`, sub-stream `stream`.
Rng episode_rng(const FamilyConfig& cfg, std::uint64_t task_id, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Dataset files

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

enum class DatasetFormat { Binary, Text };

struct DatasetManifest {
  std::uint32_t format_version = kDatasetFormatVersion;
  std::uint64_t num_trajectories = 0;
  int horizon = 0;
  int num_arms = 0;
  int dim = 0;
  FamilyConfig family;
  std::string demonstrator;
  double noise_variance = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t first_task_id = 0;
  int trajectories_per_task = 1;
  /// Fraction of trajectories in which every arm was pulled at least once.
  double coverage_fraction = 0.0;

  bool operator==(const DatasetManifest& other) const;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Trajectory> trajectories;
};

void write_dataset(const std::filesystem::path& path, const Dataset& data, DatasetFormat format);
/// Format is detected from the leading bytes.
Dataset read_dataset(const std::filesystem::path& path);

double coverage_fraction(const std::vector<Trajectory>& trajectories);

struct GenerateOptions {
  std::uint64_t num_tasks = 0;
  std::uint64_t first_task_id = 0;
  int trajectories_per_task = 1;
  DatasetFormat format = DatasetFormat::Binary;
  int workers = 1;
};

/// Samples tasks first_task_id .. first_task_id + num_tasks - 1, rolls out the
/// demonstrator on each and streams the trajectories to `path` in task order.
DatasetManifest generate_pretraining_set(const TaskWorld& world, const DemonstratorConfig& demo,
                                         const GenerateOptions& options, const std::filesystem::path& path);

/// Same rollouts, kept in memory.
Dataset generate_dataset(const TaskWorld& world, const DemonstratorConfig& demo, const GenerateOptions& options);

/// Ratings CSV with header user_id,item_id,rating[,timestamp]. The `num_items`
/// most-rated items become arms; users with at least `min_user_interactions`
/// ratings on those items become tasks.
RatingsData ingest_ratings_csv(const std::filesystem::path& path, int num_items, int min_user_interactions,
                               double noise_std);

}  // namespace bandit_icl
