#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "bandit_icl/error.hpp"
#include "bandit_icl/parallel.hpp"
#include "bandit_icl/rng.hpp"
#include "bandit_icl/training.hpp"

namespace bandit_icl {
namespace {

std::size_t num_chunks(std::size_t count) { return (count + kGradientChunk - 1) / kGradientChunk; }

std::span<const Trajectory* const> chunk_of(std::span<const Trajectory* const> items, std::size_t c) {
  const std::size_t begin = c * kGradientChunk;
  return items.subspan(begin, std::min<std::size_t>(kGradientChunk, items.size() - begin));
}

}  // namespace

double evaluate_loss(const TransformerParams<float>& params, std::span<const Trajectory* const> trajs, LossMode mode,
                     DptTarget dpt_target, int workers) {
  if (trajs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> sums(num_chunks(trajs.size()), 0.0);
  parallel_for(sums.size(), workers, [&](std::size_t c) {
    const auto chunk = chunk_of(trajs, c);
    const auto tokens = training_tokens<float>(chunk, params.config().context_len);
    const auto targets = loss_targets<float>(chunk, dpt_target);
    const auto tr = forward(params, tokens);
    sums[c] = loss_sum<float>(mode, tr, targets, 1.0f, {}, {});
  });
  double total = 0.0;
  for (double s : sums) total += s;
  return total / static_cast<double>(trajs.size());
}

TrainResult train(const std::vector<Trajectory>& data, const TransformerConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  if (data.empty()) fail(ErrorKind::EmptyDataset, "training set is empty");
  const int n = data.front().horizon();
  const int arms = data.front().num_arms();
  for (const Trajectory& t : data) {
    if (t.horizon() != n || t.num_arms() != arms) {
      fail(ErrorKind::HeterogeneousShapes, "training trajectories differ in horizon or arm count");
    }
  }
  if (arms != cfg.num_arms) fail(ErrorKind::ShapeMismatch, "dataset arm count differs from model num_arms");
  if (n > cfg.context_len - 1) fail(ErrorKind::ContextOverflow, "horizon exceeds context_len - 1");
  if (options.validation_fraction < 0.0 || options.validation_fraction >= 1.0) {
    fail(ErrorKind::Validation, "validation_fraction must be in [0, 1)");
  }

  Rng rng(derive_seed(cfg.seed, 0x5eed7a11));

  std::set<std::uint64_t> task_set;
  for (const Trajectory& t : data) task_set.insert(t.task_id);
  std::vector<std::uint64_t> task_ids(task_set.begin(), task_set.end());
  rng.shuffle(std::span<std::uint64_t>(task_ids));
  const auto n_val = static_cast<std::size_t>(std::floor(options.validation_fraction * task_ids.size()));
  const std::set<std::uint64_t> val_tasks(task_ids.begin(), task_ids.begin() + static_cast<long>(n_val));

  std::vector<const Trajectory*> train_set;
  std::vector<const Trajectory*> val_set;
  for (const Trajectory& t : data) (val_tasks.count(t.task_id) ? val_set : train_set).push_back(&t);
  if (train_set.empty()) fail(ErrorKind::EmptyDataset, "no trajectories left for training after the split");

  TrainResult result{TransformerParams<float>::init(cfg, cfg.seed), {}, 0.0, 0, false, train_set.size(),
                     val_set.size()};
  TransformerParams<float>& params = result.params;
  result.initial_loss = evaluate_loss(params, train_set, options.mode, options.dpt_target, options.workers);
  if (cfg.max_epochs == 0) return result;

  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t max_chunks = num_chunks(std::min(batch, train_set.size()));
  std::vector<std::vector<float>> chunk_grads(max_chunks, std::vector<float>(params.size()));
  std::vector<ForwardTrace<float>> traces(max_chunks);
  std::vector<double> chunk_loss(max_chunks);
  std::vector<float> grads(params.size());
  AdamState adam;
  adam.beta1 = options.adam_beta1;
  adam.beta2 = options.adam_beta2;
  adam.eps = options.adam_eps;

  double best_val = val_set.empty() ? 0.0 : evaluate_loss(params, val_set, options.mode, options.dpt_target,
                                                          options.workers);
  std::vector<float> best_params(params.data().begin(), params.data().end());
  int bad_epochs = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    // Only the order of trajectories is shuffled; rounds inside each stay put.
    rng.shuffle(std::span<const Trajectory*>(train_set));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train_set.size(); start += batch) {
      const std::span<const Trajectory* const> items(train_set.data() + start,
                                                     std::min(batch, train_set.size() - start));
      const std::size_t chunks = num_chunks(items.size());
      const float scale = 1.0f / static_cast<float>(items.size());
      parallel_for(chunks, options.workers, [&](std::size_t c) {
        const auto chunk = chunk_of(items, c);
        const auto tokens = training_tokens<float>(chunk, cfg.context_len);
        const auto targets = loss_targets<float>(chunk, options.dpt_target);
        forward(params, tokens, traces[c]);
        const std::size_t na = static_cast<std::size_t>(tokens.batch) * tokens.length * cfg.num_arms;
        std::vector<float> d_reward;
        std::vector<float> d_action;
        if (options.mode == LossMode::PreDeToR) {
          d_reward.resize(na);
        } else {
          d_action.resize(na);
        }
        chunk_loss[c] = loss_sum<float>(options.mode, traces[c], targets, scale, d_reward, d_action);
        std::fill(chunk_grads[c].begin(), chunk_grads[c].end(), 0.0f);
        backward<float>(params, traces[c], d_reward, d_action, chunk_grads[c]);
      });
      std::copy(chunk_grads[0].begin(), chunk_grads[0].end(), grads.begin());
      epoch_loss += chunk_loss[0];
      for (std::size_t c = 1; c < chunks; ++c) {
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += chunk_grads[c][i];
        epoch_loss += chunk_loss[c];
      }
      adam_step<float>(params.mutable_data(), grads, adam, cfg.learning_rate);
    }

    EpochStats stats{epoch, epoch_loss / static_cast<double>(train_set.size()),
                     std::numeric_limits<double>::quiet_NaN()};
    if (!val_set.empty()) {
      stats.validation_loss = evaluate_loss(params, val_set, options.mode, options.dpt_target, options.workers);
    }
    result.curve.push_back(stats);
    if (options.on_epoch) options.on_epoch(stats);
    if (val_set.empty()) continue;
    if (stats.validation_loss < best_val - cfg.min_delta) {
      best_val = stats.validation_loss;
      best_params.assign(params.data().begin(), params.data().end());
      result.best_epoch = epoch;
      bad_epochs = 0;
    } else if (++bad_epochs >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  if (val_set.empty()) {
    result.best_epoch = static_cast<int>(result.curve.size());
  } else {
    auto dst = params.mutable_data();
    std::copy(best_params.begin(), best_params.end(), dst.begin());
  }
  return result;
}

}  // namespace bandit_icl
