#pragma once

// Decoder-only causal transformer over (action, reward) tokens with a reward
// head and an action head. Templated on the scalar so that training runs in
// float while gradient and forward-pass oracles run the same code in double.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bandit_icl/trajectory.hpp"

namespace bandit_icl {

struct TransformerConfig {
  int n_layers = 4;
  int n_heads = 4;
  int d_embd = 32;
  /// Maximum token count, start token included: horizon + 1.
  int context_len = 26;
  int num_arms = 5;
  double learning_rate = 1.5e-4;
  int batch_size = 64;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  int patience = 3;
  double min_delta = 1e-5;

  int head_dim() const { return d_embd / n_heads; }
  void validate() const;
  bool operator==(const TransformerConfig&) const = default;
};

enum class LossMode { PreDeToR, DPT, AD };

std::string to_string(LossMode mode);
LossMode parse_loss_mode(std::string_view name);

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Offsets of every tensor inside the flat parameter vector.
struct ParamLayout {
  struct Block {
    std::size_t ln1_g, ln1_b, w_qkv, b_qkv, w_out, b_out, ln2_g, ln2_b, w_up, b_up, w_down, b_down;
  };
  std::size_t start = 0, w_in = 0, b_in = 0, pos = 0;
  std::vector<Block> blocks;
  std::size_t lnf_g = 0, lnf_b = 0, reward_w = 0, reward_b = 0, action_w = 0, action_b = 0;
  std::size_t total = 0;
  std::vector<TensorInfo> tensors;

  static ParamLayout build(const TransformerConfig& cfg);
  const TensorInfo& find(std::string_view name) const;
};

/// Flat parameter vector plus a version stamp. Every mutable access takes a
/// fresh stamp, so a trace recorded before a mutation can be detected as stale.
template <typename T>
class TransformerParams {
 public:
  explicit TransformerParams(const TransformerConfig& cfg);

  /// Gaussian(0, 0.02) weights, zero biases, unit layer-norm gains.
  static TransformerParams init(const TransformerConfig& cfg, std::uint64_t seed);

  const TransformerConfig& config() const { return cfg_; }
  const ParamLayout& layout() const { return layout_; }
  std::span<const T> data() const { return values_; }
  std::span<T> mutable_data();
  std::span<const T> tensor(std::string_view name) const;
  std::span<T> mutable_tensor(std::string_view name);
  std::uint64_t version() const { return version_; }
  std::size_t size() const { return values_.size(); }

  template <typename U>
  TransformerParams<U> cast() const;

  bool operator==(const TransformerParams& o) const { return cfg_ == o.cfg_ && values_ == o.values_; }

 private:
  TransformerConfig cfg_;
  ParamLayout layout_;
  std::vector<T> values_;
  std::uint64_t version_;
};

/// `batch` token sequences of equal `length` (start token included). Each
/// sequence contributes length - 1 history pairs.
template <typename T>
struct TokenBatch {
  int batch = 0;
  int length = 0;
  std::vector<int> actions;  // batch * (length - 1)
  std::vector<T> rewards;
};

/// One sequence: start token followed by the given (action, reward) history.
template <typename T>
TokenBatch<T> tokenize(std::span<const int> actions, std::span<const double> rewards, int num_arms,
                       int context_len);

/// Training input for whole trajectories: the first n - 1 pairs, so that the
/// output at position p predicts round p + 1 for p = 0..n-1.
template <typename T>
TokenBatch<T> training_tokens(std::span<const Trajectory* const> trajs, int context_len);

/// Explicit token matrix, one row per position: [onehot(action) | reward | is_start].
template <typename T>
std::vector<std::vector<T>> token_matrix(const TokenBatch<T>& tokens, int num_arms, int sequence = 0);

/// Cached activations from one forward pass. Buffers are reused across calls.
template <typename T>
struct ForwardTrace {
  struct Layer {
    std::vector<T> x_in, ln1_hat, ln1_rstd, ln1_out, qkv, probs, attn, x_mid, ln2_hat, ln2_rstd, ln2_out, up,
        act;
  };
  std::uint64_t params_version = 0;
  const void* params_id = nullptr;
  TokenBatch<T> tokens;
  std::vector<Layer> layers;
  std::vector<T> x_final, lnf_hat, lnf_rstd, lnf_out;
  /// (batch * length) x num_arms, row-major.
  std::vector<T> reward_logits;
  std::vector<T> action_logits;

  int rows() const { return tokens.batch * tokens.length; }
};

template <typename T>
void forward(const TransformerParams<T>& params, const TokenBatch<T>& tokens, ForwardTrace<T>& trace);

template <typename T>
ForwardTrace<T> forward(const TransformerParams<T>& params, const TokenBatch<T>& tokens);

/// Accumulates into `grads` (same layout as the parameters) the gradient
/// given upstream derivatives for both heads. Throws StaleTrace if the
/// parameters changed since the trace was recorded.
template <typename T>
void backward(const TransformerParams<T>& params, const ForwardTrace<T>& trace, std::span<const T> d_reward,
              std::span<const T> d_action, std::span<T> grads);

/// Targets aligned with training_tokens: per sequence, n taken actions, n
/// rewards and one target action for DPT.
template <typename T>
struct LossTargets {
  std::vector<int> actions;
  std::vector<T> rewards;
  std::vector<int> best;
};

enum class DptTarget { ApproxOptimal, TrueOptimal };

template <typename T>
LossTargets<T> loss_targets(std::span<const Trajectory* const> trajs, DptTarget dpt_target);

/// Sum over sequences of each sequence's mean per-round loss. When the
/// derivative buffers are non-empty they receive scale * d(sum)/d(logits).
template <typename T>
double loss_sum(LossMode mode, const ForwardTrace<T>& trace, const LossTargets<T>& targets, T scale,
                std::span<T> d_reward, std::span<T> d_action);

/// Mean loss over the trajectories of `trace`.
template <typename T>
double loss(LossMode mode, const ForwardTrace<T>& trace, const LossTargets<T>& targets);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

/// One bias-corrected Adam update; moments are lazily sized on first use.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState& state, double lr);

}  // namespace bandit_icl
