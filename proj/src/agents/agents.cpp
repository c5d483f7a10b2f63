#include "bandit_icl/agents.hpp"

#include <memory>

#include "bandit_icl/error.hpp"
#include "bandit_icl/parallel.hpp"

namespace bandit_icl {

LossMode PolicyKind::training_mode() const {
  switch (variant) {
    case PolicyVariant::PreDeToR:
    case PolicyVariant::PreDeToRTau: return LossMode::PreDeToR;
    case PolicyVariant::DPTGreedyOnline: return LossMode::DPT;
    case PolicyVariant::AD: return LossMode::AD;
  }
  return LossMode::PreDeToR;
}

std::string PolicyKind::label() const {
  switch (variant) {
    case PolicyVariant::PreDeToR: return "predetor";
    case PolicyVariant::PreDeToRTau: return "predetor_tau";
    case PolicyVariant::DPTGreedyOnline: return "dpt";
    case PolicyVariant::AD: return "ad";
  }
  return "?";
}

void PolicyKind::validate() const {
  if (variant != PolicyVariant::PreDeToR && !(tau > 0.0)) fail(ErrorKind::Validation, "tau must be > 0");
}

PolicyKind parse_policy(std::string_view name, double tau) {
  PolicyKind p;
  p.tau = tau;
  if (name == "predetor") {
    p.variant = PolicyVariant::PreDeToR;
  } else if (name == "predetor_tau") {
    p.variant = PolicyVariant::PreDeToRTau;
  } else if (name == "dpt") {
    p.variant = PolicyVariant::DPTGreedyOnline;
  } else if (name == "ad") {
    p.variant = PolicyVariant::AD;
  } else {
    fail(ErrorKind::Validation, "unknown model policy '" + std::string(name) + "'");
  }
  p.validate();
  return p;
}

ModelOutputs predict(const TransformerParams<float>& params, std::span<const int> actions,
                     std::span<const double> rewards) {
  const auto& cfg = params.config();
  const auto tokens = tokenize<float>(actions, rewards, cfg.num_arms, cfg.context_len);
  const auto tr = forward(params, tokens);
  const std::size_t last = static_cast<std::size_t>(tokens.length - 1) * cfg.num_arms;
  ModelOutputs out;
  out.rewards.assign(tr.reward_logits.begin() + static_cast<long>(last), tr.reward_logits.end());
  out.action_logits.assign(tr.action_logits.begin() + static_cast<long>(last), tr.action_logits.end());
  return out;
}

std::vector<double> predict_rewards(const TransformerParams<float>& params, std::span<const int> actions,
                                    std::span<const double> rewards) {
  return predict(params, actions, rewards).rewards;
}

int select_action(const PolicyKind& policy, std::span<const double> values, Rng& rng) {
  if (values.empty()) fail(ErrorKind::InvalidArgument, "select_action on an empty vector");
  if (policy.variant == PolicyVariant::PreDeToR) {
    return argmax_lowest(std::vector<double>(values.begin(), values.end()));
  }
  return sample_softmax(values, policy.tau, rng);
}

namespace {

EpisodeResult start_episode(const TaskSpec& task, const ActionSet& actions, std::uint64_t task_id,
                            const std::string& demonstrator, Eigen::VectorXd& means) {
  means = mean_rewards(task, actions);
  EpisodeResult res;
  res.trajectory.task_id = task_id;
  res.trajectory.true_means.assign(means.data(), means.data() + means.size());
  res.trajectory.optimal_action = argmax_lowest(means);
  res.trajectory.family = to_string(task.family);
  res.trajectory.demonstrator = demonstrator;
  return res;
}

void record(EpisodeResult& res, const Eigen::VectorXd& means, int arm, double reward) {
  res.trajectory.actions.push_back(arm);
  res.trajectory.rewards.push_back(reward);
  res.regret.push_back(means.maxCoeff() - means[arm]);
}

}  // namespace

EpisodeResult run_online_episode(const TransformerParams<float>& params, const PolicyKind& policy,
                                 const TaskSpec& task, const ActionSet& actions, int n, Rng& rng,
                                 std::uint64_t task_id) {
  policy.validate();
  if (n < 0) fail(ErrorKind::Validation, "horizon must be >= 0");
  if (n > params.config().context_len - 1) fail(ErrorKind::ContextOverflow, "horizon exceeds context_len - 1");
  if (actions.num_arms() != params.config().num_arms) {
    fail(ErrorKind::ShapeMismatch, "task arm count differs from the checkpoint");
  }
  Eigen::VectorXd means;
  EpisodeResult res = start_episode(task, actions, task_id, policy.label(), means);
  for (int t = 0; t < n; ++t) {
    const ModelOutputs out = predict(params, res.trajectory.actions, res.trajectory.rewards);
    const std::vector<double>& head = policy.uses_reward_head() ? out.rewards : out.action_logits;
    const int arm = select_action(policy, head, rng);
    if (policy.uses_reward_head()) res.predictions.push_back(out.rewards);
    record(res, means, arm, sample_reward(task, actions, arm, rng));
  }
  return res;
}

EpisodeResult run_policy_episode(BanditPolicy& policy, const TaskSpec& task, const ActionSet& actions, int n,
                                 Rng& rng, std::uint64_t task_id) {
  Eigen::VectorXd means;
  EpisodeResult res = start_episode(task, actions, task_id, policy.name(), means);
  for (int t = 0; t < n; ++t) {
    const int arm = policy.select(rng);
    const double reward = sample_reward(task, actions, arm, rng);
    policy.observe(arm, reward);
    record(res, means, arm, reward);
  }
  return res;
}

OfflineDecision run_offline_eval(const TransformerParams<float>& params, const PolicyKind& policy,
                                 const Trajectory& offline, const TaskSpec& task, const ActionSet& actions,
                                 Rng& rng) {
  policy.validate();
  const ModelOutputs out = predict(params, offline.actions, offline.rewards);
  int arm = 0;
  if (policy.variant == PolicyVariant::DPTGreedyOnline) {
    arm = argmax_lowest(out.action_logits);
  } else {
    arm = select_action(policy, policy.uses_reward_head() ? out.rewards : out.action_logits, rng);
  }
  const Eigen::VectorXd means = mean_rewards(task, actions);
  return {arm, means.maxCoeff() - means[arm]};
}

std::unique_ptr<BanditPolicy> make_baseline(const BaselineSpec& spec, const TaskInstance& instance,
                                            const FamilyConfig& cfg) {
  const std::string& name = spec.name;
  if (name == "ts" || name == "linucb" || name == "linucb_soft" || name == "uniform") {
    DemonstratorConfig demo = spec.demo;
    demo.kind = parse_demonstrator(name);
    return make_demonstrator(demo, instance.actions, cfg.noise_variance);
  }
  if (name == "mlin") {
    if (!spec.mlin) fail(ErrorKind::Validation, "mlin baseline needs a fitted model");
    return std::make_unique<MLinGreedyPolicy>(std::make_shared<const MLinModel>(*spec.mlin), instance.actions);
  }
  if (name == "estr" || name == "estr_oracle") {
    EstrOptions opts = spec.estr;
    if (opts.horizon <= 0) opts.horizon = cfg.horizon;
    opts.oracle.reset();
    if (name == "estr_oracle") {
      if (!instance.task.latent) fail(ErrorKind::MissingLatentShared, "estr_oracle needs the latent family");
      opts.oracle = *instance.task.latent;
    }
    return std::make_unique<EstrPolicy>(instance.actions, opts);
  }
  if (name == "bayes_greedy") {
    return std::make_unique<BayesGreedyPolicy>(cfg.num_arms, cfg.noise_variance, spec.pooled_means,
                                               spec.sigma_theta_sq);
  }
  fail(ErrorKind::Validation, "unknown baseline '" + name + "'");
}

std::vector<EpisodeResult> run_model_on_tests(const TransformerParams<float>& params, const PolicyKind& policy,
                                              const TaskWorld& world, std::uint64_t count, int workers) {
  std::vector<EpisodeResult> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), workers, [&](std::size_t i) {
    const std::uint64_t id = kTestTaskIdBase + i;
    const TaskInstance inst = make_task(world, id);
    Rng rng = episode_rng(world.cfg, id, 0);
    out[i] = run_online_episode(params, policy, inst.task, inst.actions, world.cfg.horizon, rng, id);
  });
  return out;
}

std::vector<EpisodeResult> run_baseline_on_tests(const BaselineSpec& spec, const TaskWorld& world,
                                                 std::uint64_t count, int workers) {
  std::vector<EpisodeResult> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), workers, [&](std::size_t i) {
    const std::uint64_t id = kTestTaskIdBase + i;
    const TaskInstance inst = make_task(world, id);
    auto policy = make_baseline(spec, inst, world.cfg);
    Rng rng = episode_rng(world.cfg, id, 0);
    out[i] = run_policy_episode(*policy, inst.task, inst.actions, world.cfg.horizon, rng, id);
  });
  return out;
}

}  // namespace bandit_icl
