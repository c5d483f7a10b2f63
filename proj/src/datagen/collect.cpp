#include <algorithm>
#include <string>

#include "bandit_icl/datagen.hpp"
#include "bandit_icl/error.hpp"
#include "bandit_icl/parallel.hpp"

namespace bandit_icl {
namespace {

constexpr std::uint64_t kActionStream = 0xFFFF000000000001ULL;
constexpr std::uint64_t kLatentStream = 0xFFFF000000000002ULL;
constexpr std::uint64_t kUserSplitStream = 0xFFFF000000000003ULL;

}  // namespace

std::string to_string(DemonstratorKind kind) {
  switch (kind) {
    case DemonstratorKind::Thompson: return "ts";
    case DemonstratorKind::LinUcb: return "linucb";
    case DemonstratorKind::SoftLinUcb: return "linucb_soft";
    case DemonstratorKind::Uniform: return "uniform";
  }
  return "unknown";
}

DemonstratorKind parse_demonstrator(std::string_view name) {
  for (DemonstratorKind k : {DemonstratorKind::Thompson, DemonstratorKind::LinUcb, DemonstratorKind::SoftLinUcb,
                             DemonstratorKind::Uniform}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::Validation, "unknown demonstrator '" + std::string(name) + "'");
}

std::unique_ptr<BanditPolicy> make_demonstrator(const DemonstratorConfig& cfg, const ActionSet& actions,
                                                double noise_variance) {
  switch (cfg.kind) {
    case DemonstratorKind::Thompson: {
      double s2 = cfg.ts_sigma_sq > 0.0 ? cfg.ts_sigma_sq : noise_variance;
      if (!(s2 > 0.0)) s2 = 1.0;
      return std::make_unique<ThompsonPolicy>(actions.num_arms(), s2);
    }
    case DemonstratorKind::LinUcb:
      return std::make_unique<LinUcbPolicy>(actions, cfg.alpha, cfg.lambda);
    case DemonstratorKind::SoftLinUcb:
      return std::make_unique<LinUcbPolicy>(actions, cfg.alpha, cfg.lambda, cfg.tau);
    case DemonstratorKind::Uniform:
      return std::make_unique<UniformPolicy>(actions.num_arms());
  }
  fail(ErrorKind::InvalidArgument, "unhandled demonstrator");
}

Trajectory collect_trajectory(const TaskSpec& task, const ActionSet& actions, BanditPolicy& demonstrator, int n,
                              Rng& rng, std::uint64_t task_id) {
  Trajectory traj;
  traj.task_id = task_id;
  const Eigen::VectorXd mu = mean_rewards(task, actions);
  traj.true_means.assign(mu.data(), mu.data() + mu.size());
  traj.optimal_action = argmax_lowest(mu);
  traj.family = std::string(to_string(task.family));
  traj.demonstrator = demonstrator.name();
  traj.actions.reserve(static_cast<std::size_t>(std::max(n, 0)));
  traj.rewards.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int t = 0; t < n; ++t) {
    const int a = demonstrator.select(rng);
    const double r = sample_reward(task, actions, a, rng);
    demonstrator.observe(a, r);
    traj.actions.push_back(a);
    traj.rewards.push_back(r);
  }
  return traj;
}

TaskWorld make_world(const FamilyConfig& cfg, const RatingsData* ratings, int test_users) {
  cfg.validate();
  TaskWorld world;
  world.cfg = cfg;
  if (cfg.family == Family::Histogram) {
    if (!ratings || ratings->tasks.empty()) fail(ErrorKind::Validation, "histogram family needs ingested ratings");
    if (static_cast<int>(ratings->item_ids.size()) != cfg.num_arms) {
      fail(ErrorKind::Validation, "ratings arm count does not match num_arms");
    }
    std::vector<std::size_t> order(ratings->tasks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng split(derive_seed(cfg.seed, kUserSplitStream));
    split.shuffle(std::span<std::size_t>(order));
    const auto n_test = static_cast<std::size_t>(std::clamp(test_users, 0, static_cast<int>(order.size()) - 1));
    for (std::size_t i = 0; i < order.size(); ++i) {
      TaskSpec t = ratings->tasks[order[i]];
      t.noise_std = cfg.noise_std();
      (i < n_test ? world.histogram_test : world.histogram_train).push_back(std::move(t));
    }
    if (world.histogram_test.empty()) world.histogram_test = world.histogram_train;
  }
  Rng action_rng(derive_seed(cfg.seed, kActionStream));
  world.base_actions = sample_action_set(cfg, action_rng);
  if (cfg.family == Family::Latent) {
    Rng latent_rng(derive_seed(cfg.seed, kLatentStream));
    world.latent = std::make_shared<const LatentShared>(sample_latent_shared(cfg, latent_rng));
  }
  return world;
}

TaskInstance make_task(const TaskWorld& world, std::uint64_t task_id) {
  TaskInstance inst;
  inst.task_id = task_id;
  Rng rng(derive_seed(world.cfg.seed, task_id));
  if (world.cfg.family == Family::Histogram) {
    const bool is_test = task_id >= kTestTaskIdBase;
    const auto& pool = is_test ? world.histogram_test : world.histogram_train;
    const std::size_t idx = is_test ? static_cast<std::size_t>((task_id - kTestTaskIdBase) % pool.size())
                                    : rng.uniform_index(pool.size());
    inst.task = pool[idx];
  } else {
    inst.task = sample_task(world.cfg, world.latent, rng);
  }
  inst.actions = world.base_actions;
  if (world.cfg.num_new_actions_per_task > 0) inst.actions = resample_new_actions(world.base_actions, rng);
  return inst;
}

Rng episode_rng(const FamilyConfig& cfg, std::uint64_t task_id, std::uint64_t stream) {
  return Rng(derive_seed(derive_seed(cfg.seed, task_id), stream + 1));
}

double coverage_fraction(const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) return 0.0;
  std::size_t covered = 0;
  for (const Trajectory& t : trajectories) {
    std::vector<char> seen(static_cast<std::size_t>(t.num_arms()), 0);
    for (int a : t.actions) seen[static_cast<std::size_t>(a)] = 1;
    if (std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; })) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(trajectories.size());
}

namespace {

std::vector<Trajectory> rollout_block(const TaskWorld& world, const DemonstratorConfig& demo,
                                      std::uint64_t first_id, std::uint64_t count, int per_task, int workers) {
  std::vector<Trajectory> out(static_cast<std::size_t>(count) * static_cast<std::size_t>(per_task));
  parallel_for(static_cast<std::size_t>(count), workers, [&](std::size_t i) {
    const std::uint64_t id = first_id + i;
    const TaskInstance inst = make_task(world, id);
    for (int j = 0; j < per_task; ++j) {
      Rng rng = episode_rng(world.cfg, id, static_cast<std::uint64_t>(j));
      auto policy = make_demonstrator(demo, inst.actions, world.cfg.noise_variance);
      out[i * static_cast<std::size_t>(per_task) + static_cast<std::size_t>(j)] =
          collect_trajectory(inst.task, inst.actions, *policy, world.cfg.horizon, rng, id);
    }
  });
  return out;
}

DatasetManifest base_manifest(const TaskWorld& world, const DemonstratorConfig& demo, const GenerateOptions& options) {
  DatasetManifest m;
  m.num_trajectories = options.num_tasks * static_cast<std::uint64_t>(options.trajectories_per_task);
  m.horizon = world.cfg.horizon;
  m.num_arms = world.cfg.num_arms;
  m.dim = world.base_actions.dim();
  m.family = world.cfg;
  m.demonstrator = to_string(demo.kind);
  m.noise_variance = world.cfg.noise_variance;
  m.seed = world.cfg.seed;
  m.first_task_id = options.first_task_id;
  m.trajectories_per_task = options.trajectories_per_task;
  return m;
}

}  // namespace

Dataset generate_dataset(const TaskWorld& world, const DemonstratorConfig& demo, const GenerateOptions& options) {
  if (options.trajectories_per_task < 1) fail(ErrorKind::Validation, "trajectories_per_task must be >= 1");
  Dataset data;
  data.manifest = base_manifest(world, demo, options);
  data.trajectories = rollout_block(world, demo, options.first_task_id, options.num_tasks,
                                    options.trajectories_per_task, options.workers);
  data.manifest.coverage_fraction = coverage_fraction(data.trajectories);
  return data;
}

}  // namespace bandit_icl
