#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bandit_icl/transformer.hpp"

namespace bandit_icl {

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  /// NaN when there is no validation split.
  double validation_loss = 0.0;
};

struct TrainOptions {
  LossMode mode = LossMode::PreDeToR;
  DptTarget dpt_target = DptTarget::ApproxOptimal;
  int workers = 1;
  /// Share of distinct tasks held out for early stopping (rounded down).
  double validation_fraction = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
  TransformerParams<float> params;
  std::vector<EpochStats> curve;
  /// Mean training loss of the initial parameters.
  double initial_loss = 0.0;
  /// Epoch whose parameters were kept (0 = initialization).
  int best_epoch = 0;
  bool early_stopped = false;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
};

/// Gradients are accumulated per fixed chunk of trajectories and reduced in
/// chunk order, so results depend on the seed but not on the worker count.
inline constexpr int kGradientChunk = 8;

TrainResult train(const std::vector<Trajectory>& data, const TransformerConfig& cfg, const TrainOptions& options);

/// Mean per-trajectory loss of `params` over `trajs`.
double evaluate_loss(const TransformerParams<float>& params, std::span<const Trajectory* const> trajs, LossMode mode,
                     DptTarget dpt_target, int workers);

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct Checkpoint {
  TransformerParams<float> params;
  LossMode mode = LossMode::PreDeToR;
  /// Free-form JSON object (training curve, dataset digest, ...).
  std::string metadata_json = "{}";
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws CorruptCheckpoint on truncation, bad magic or digest mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string config_to_json(const TransformerConfig& cfg);
TransformerConfig config_from_json(const std::string& json);

}  // namespace bandit_icl
