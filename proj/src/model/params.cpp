#include <atomic>

#include "bandit_icl/error.hpp"
#include "bandit_icl/rng.hpp"
#include "bandit_icl/transformer.hpp"

namespace bandit_icl {
namespace {

std::atomic<std::uint64_t> g_version{1};

std::uint64_t next_version() { return g_version.fetch_add(1, std::memory_order_relaxed); }

bool is_gain(const std::string& name) { return name.ends_with(".g"); }
bool is_bias(const std::string& name) {
  return name.ends_with(".b") || name.ends_with("b_in") || name.ends_with("b_qkv") || name.ends_with("b_out") ||
         name.ends_with("b_up") || name.ends_with("b_down");
}

}  // namespace

void TransformerConfig::validate() const {
  if (n_layers < 0) fail(ErrorKind::Validation, "n_layers must be >= 0");
  if (n_heads < 1 || d_embd < 1) fail(ErrorKind::Validation, "n_heads and d_embd must be >= 1");
  if (d_embd % n_heads != 0) fail(ErrorKind::Validation, "d_embd must be divisible by n_heads");
  if (context_len < 1) fail(ErrorKind::Validation, "context_len must be >= 1");
  if (num_arms < 1) fail(ErrorKind::Validation, "num_arms must be >= 1");
  if (!(learning_rate > 0.0)) fail(ErrorKind::Validation, "learning_rate must be > 0");
  if (batch_size < 1) fail(ErrorKind::Validation, "batch_size must be >= 1");
  if (max_epochs < 0) fail(ErrorKind::Validation, "max_epochs must be >= 0");
  if (patience < 1) fail(ErrorKind::Validation, "patience must be >= 1");
  if (min_delta < 0.0) fail(ErrorKind::Validation, "min_delta must be >= 0");
}

std::string to_string(LossMode mode) {
  switch (mode) {
    case LossMode::PreDeToR: return "predetor";
    case LossMode::DPT: return "dpt";
    case LossMode::AD: return "ad";
  }
  return "?";
}

LossMode parse_loss_mode(std::string_view name) {
  if (name == "predetor") return LossMode::PreDeToR;
  if (name == "dpt") return LossMode::DPT;
  if (name == "ad") return LossMode::AD;
  fail(ErrorKind::Validation, "unknown loss mode '" + std::string(name) + "'");
}

ParamLayout ParamLayout::build(const TransformerConfig& cfg) {
  cfg.validate();
  ParamLayout lay;
  const int d = cfg.d_embd;
  const int a = cfg.num_arms;
  auto add = [&lay](std::string name, std::vector<int> shape) {
    std::size_t size = 1;
    for (int s : shape) size *= static_cast<std::size_t>(s);
    const std::size_t off = lay.total;
    lay.tensors.push_back({std::move(name), std::move(shape), off, size});
    lay.total += size;
    return off;
  };
  lay.start = add("start", {d});
  lay.w_in = add("w_in", {a + 1, d});
  lay.b_in = add("b_in", {d});
  lay.pos = add("pos", {cfg.context_len, d});
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "h" + std::to_string(l) + ".";
    Block b{};
    b.ln1_g = add(p + "ln1.g", {d});
    b.ln1_b = add(p + "ln1.b", {d});
    b.w_qkv = add(p + "attn.w_qkv", {d, 3 * d});
    b.b_qkv = add(p + "attn.b_qkv", {3 * d});
    b.w_out = add(p + "attn.w_out", {d, d});
    b.b_out = add(p + "attn.b_out", {d});
    b.ln2_g = add(p + "ln2.g", {d});
    b.ln2_b = add(p + "ln2.b", {d});
    b.w_up = add(p + "mlp.w_up", {d, 4 * d});
    b.b_up = add(p + "mlp.b_up", {4 * d});
    b.w_down = add(p + "mlp.w_down", {4 * d, d});
    b.b_down = add(p + "mlp.b_down", {d});
    lay.blocks.push_back(b);
  }
  lay.lnf_g = add("ln_f.g", {d});
  lay.lnf_b = add("ln_f.b", {d});
  lay.reward_w = add("reward_head.w", {d, a});
  lay.reward_b = add("reward_head.b", {a});
  lay.action_w = add("action_head.w", {d, a});
  lay.action_b = add("action_head.b", {a});
  return lay;
}

const TensorInfo& ParamLayout::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  fail(ErrorKind::InvalidArgument, "no tensor named '" + std::string(name) + "'");
}

template <typename T>
TransformerParams<T>::TransformerParams(const TransformerConfig& cfg)
    : cfg_(cfg), layout_(ParamLayout::build(cfg)), values_(layout_.total, T(0)), version_(next_version()) {}

template <typename T>
TransformerParams<T> TransformerParams<T>::init(const TransformerConfig& cfg, std::uint64_t seed) {
  TransformerParams p(cfg);
  Rng rng(derive_seed(seed, 0x1417));
  auto values = p.mutable_data();
  for (const TensorInfo& t : p.layout_.tensors) {
    T* out = values.data() + t.offset;
    if (is_gain(t.name)) {
      std::fill(out, out + t.size, T(1));
    } else if (!is_bias(t.name)) {
      for (std::size_t i = 0; i < t.size; ++i) out[i] = static_cast<T>(0.02 * rng.normal());
    }
  }
  return p;
}

template <typename T>
std::span<T> TransformerParams<T>::mutable_data() {
  version_ = next_version();
  return values_;
}

template <typename T>
std::span<const T> TransformerParams<T>::tensor(std::string_view name) const {
  const TensorInfo& t = layout_.find(name);
  return std::span<const T>(values_).subspan(t.offset, t.size);
}

template <typename T>
std::span<T> TransformerParams<T>::mutable_tensor(std::string_view name) {
  const TensorInfo& t = layout_.find(name);
  return mutable_data().subspan(t.offset, t.size);
}

template <typename T>
template <typename U>
TransformerParams<U> TransformerParams<T>::cast() const {
  TransformerParams<U> out(cfg_);
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < values_.size(); ++i) dst[i] = static_cast<U>(values_[i]);
  return out;
}

template class TransformerParams<float>;
template class TransformerParams<double>;
template TransformerParams<double> TransformerParams<float>::cast<double>() const;
template TransformerParams<float> TransformerParams<double>::cast<float>() const;
template TransformerParams<float> TransformerParams<float>::cast<float>() const;
template TransformerParams<double> TransformerParams<double>::cast<double>() const;

template <typename T>
TokenBatch<T> tokenize(std::span<const int> actions, std::span<const double> rewards, int num_arms,
                       int context_len) {
  if (actions.size() != rewards.size()) fail(ErrorKind::ShapeMismatch, "actions and rewards differ in length");
  if (static_cast<long>(actions.size()) + 1 > context_len) {
    fail(ErrorKind::ContextOverflow, "history of " + std::to_string(actions.size()) +
                                         " pairs does not fit context_len " + std::to_string(context_len));
  }
  TokenBatch<T> out;
  out.batch = 1;
  out.length = static_cast<int>(actions.size()) + 1;
  out.actions.assign(actions.begin(), actions.end());
  out.rewards.reserve(rewards.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] < 0 || actions[i] >= num_arms) fail(ErrorKind::IndexOutOfRange, "action out of range");
    out.rewards.push_back(static_cast<T>(rewards[i]));
  }
  return out;
}

template <typename T>
TokenBatch<T> training_tokens(std::span<const Trajectory* const> trajs, int context_len) {
  TokenBatch<T> out;
  out.batch = static_cast<int>(trajs.size());
  if (trajs.empty()) return out;
  const int n = trajs.front()->horizon();
  if (n < 1) fail(ErrorKind::EmptyTrajectory, "training trajectories need at least one round");
  if (n > context_len) fail(ErrorKind::ContextOverflow, "horizon exceeds context_len - 1");
  out.length = n;
  out.actions.reserve(trajs.size() * static_cast<std::size_t>(n - 1));
  out.rewards.reserve(trajs.size() * static_cast<std::size_t>(n - 1));
  for (const Trajectory* t : trajs) {
    if (t->horizon() != n) fail(ErrorKind::HeterogeneousShapes, "trajectories differ in horizon");
    for (int s = 0; s + 1 < n; ++s) {
      out.actions.push_back(t->actions[static_cast<std::size_t>(s)]);
      out.rewards.push_back(static_cast<T>(t->rewards[static_cast<std::size_t>(s)]));
    }
  }
  return out;
}

template <typename T>
std::vector<std::vector<T>> token_matrix(const TokenBatch<T>& tokens, int num_arms, int sequence) {
  std::vector<std::vector<T>> rows(static_cast<std::size_t>(tokens.length),
                                   std::vector<T>(static_cast<std::size_t>(num_arms) + 2, T(0)));
  if (tokens.length == 0) return rows;
  rows[0][static_cast<std::size_t>(num_arms) + 1] = T(1);
  const std::size_t base = static_cast<std::size_t>(sequence) * static_cast<std::size_t>(tokens.length - 1);
  for (int p = 1; p < tokens.length; ++p) {
    const std::size_t i = base + static_cast<std::size_t>(p - 1);
    rows[static_cast<std::size_t>(p)][static_cast<std::size_t>(tokens.actions[i])] = T(1);
    rows[static_cast<std::size_t>(p)][static_cast<std::size_t>(num_arms)] = tokens.rewards[i];
  }
  return rows;
}

#define BANDIT_ICL_INSTANTIATE(T)                                                                             \
  template TokenBatch<T> tokenize<T>(std::span<const int>, std::span<const double>, int, int);                \
  template TokenBatch<T> training_tokens<T>(std::span<const Trajectory* const>, int);                          \
  template std::vector<std::vector<T>> token_matrix<T>(const TokenBatch<T>&, int, int);
BANDIT_ICL_INSTANTIATE(float)
BANDIT_ICL_INSTANTIATE(double)
#undef BANDIT_ICL_INSTANTIATE

}  // namespace bandit_icl
