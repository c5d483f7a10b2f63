#pragma once

// A trained checkpoint used as an in-context decision policy: parameters stay
// fixed and only the history in the context grows.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bandit_icl/datagen.hpp"
#include "bandit_icl/demonstrators.hpp"
#include "bandit_icl/env.hpp"
#include "bandit_icl/transformer.hpp"

namespace bandit_icl {

enum class PolicyVariant { PreDeToR, PreDeToRTau, DPTGreedyOnline, AD };

struct PolicyKind {
  PolicyVariant variant = PolicyVariant::PreDeToR;
  double tau = 0.05;

  /// Reward head for the PreDeToR variants, action head otherwise.
  bool uses_reward_head() const {
    return variant == PolicyVariant::PreDeToR || variant == PolicyVariant::PreDeToRTau;
  }
  /// Loss the checkpoint must have been trained with.
  LossMode training_mode() const;
  std::string label() const;
  void validate() const;
};

/// Accepts predetor, predetor_tau, dpt, ad.
PolicyKind parse_policy(std::string_view name, double tau = 0.05);

struct ModelOutputs {
  std::vector<double> rewards;
  std::vector<double> action_logits;
};

/// Both heads at the last position of the tokenized history.
ModelOutputs predict(const TransformerParams<float>& params, std::span<const int> actions,
                     std::span<const double> rewards);

std::vector<double> predict_rewards(const TransformerParams<float>& params, std::span<const int> actions,
                                    std::span<const double> rewards);

/// Argmax (lowest index on ties) for greedy PreDeToR, softmax(values / tau) draw otherwise.
int select_action(const PolicyKind& policy, std::span<const double> values, Rng& rng);

struct EpisodeResult {
  Trajectory trajectory;
  /// max_a mu(a) - mu(I_t) per round.
  std::vector<double> regret;
  /// Predicted reward vectors used for each decision (PreDeToR variants only).
  std::vector<std::vector<double>> predictions;
};

EpisodeResult run_online_episode(const TransformerParams<float>& params, const PolicyKind& policy,
                                 const TaskSpec& task, const ActionSet& actions, int n, Rng& rng,
                                 std::uint64_t task_id = 0);

/// Same bookkeeping for a classical bandit algorithm.
EpisodeResult run_policy_episode(BanditPolicy& policy, const TaskSpec& task, const ActionSet& actions, int n,
                                 Rng& rng, std::uint64_t task_id = 0);

struct OfflineDecision {
  int arm = 0;
  double regret = 0.0;
};

/// One decision conditioned on a fixed offline history; the history is not extended.
OfflineDecision run_offline_eval(const TransformerParams<float>& params, const PolicyKind& policy,
                                 const Trajectory& offline, const TaskSpec& task, const ActionSet& actions,
                                 Rng& rng);

/// Builds a fresh classical policy for a task. `pooled_means` feeds BayesGreedy's prior.
struct BaselineSpec {
  std::string name;  // ts, linucb, linucb_soft, uniform, mlin, estr, estr_oracle, bayes_greedy
  DemonstratorConfig demo;
  std::optional<MLinModel> mlin;
  EstrOptions estr;
  std::vector<double> pooled_means;
  double sigma_theta_sq = 1.0;
};

std::unique_ptr<BanditPolicy> make_baseline(const BaselineSpec& spec, const TaskInstance& instance,
                                            const FamilyConfig& cfg);

/// Online episodes on test tasks kTestTaskIdBase + first .. + count - 1.
/// Episode randomness comes from episode_rng(cfg, task_id, 0), so results do
/// not depend on the worker count.
std::vector<EpisodeResult> run_model_on_tests(const TransformerParams<float>& params, const PolicyKind& policy,
                                              const TaskWorld& world, std::uint64_t count, int workers);
std::vector<EpisodeResult> run_baseline_on_tests(const BaselineSpec& spec, const TaskWorld& world,
                                                 std::uint64_t count, int workers);

}  // namespace bandit_icl
