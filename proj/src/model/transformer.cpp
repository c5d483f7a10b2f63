#include <cmath>
#include <limits>

#include "bandit_icl/error.hpp"
#include "bandit_icl/kernels.hpp"
#include "bandit_icl/transformer.hpp"

namespace bandit_icl {
namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

template <typename T>
void resize(std::vector<T>& v, std::size_t n) {
  v.resize(n);
}

template <typename T>
void layer_norm(int rows, int d, const T* x, const T* g, const T* b, T* hat, T* rstd, T* out) {
  for (int r = 0; r < rows; ++r) {
    const T* xr = x + static_cast<std::size_t>(r) * d;
    T mean = 0;
    for (int i = 0; i < d; ++i) mean += xr[i];
    mean /= static_cast<T>(d);
    T var = 0;
    for (int i = 0; i < d; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    rstd[r] = rs;
    T* hr = hat + static_cast<std::size_t>(r) * d;
    T* orow = out + static_cast<std::size_t>(r) * d;
    for (int i = 0; i < d; ++i) {
      hr[i] = (xr[i] - mean) * rs;
      orow[i] = hr[i] * g[i] + b[i];
    }
  }
}

// dx += layer-norm input gradient; dg, db accumulate.
template <typename T>
void layer_norm_backward(int rows, int d, const T* dy, const T* hat, const T* rstd, const T* g, T* dx, T* dg,
                         T* db) {
  for (int r = 0; r < rows; ++r) {
    const T* dyr = dy + static_cast<std::size_t>(r) * d;
    const T* hr = hat + static_cast<std::size_t>(r) * d;
    T* dxr = dx + static_cast<std::size_t>(r) * d;
    T mean_dh = 0;
    T mean_dh_h = 0;
    for (int i = 0; i < d; ++i) {
      const T dh = dyr[i] * g[i];
      mean_dh += dh;
      mean_dh_h += dh * hr[i];
      dg[i] += dyr[i] * hr[i];
      db[i] += dyr[i];
    }
    mean_dh /= static_cast<T>(d);
    mean_dh_h /= static_cast<T>(d);
    for (int i = 0; i < d; ++i) dxr[i] += rstd[r] * (dyr[i] * g[i] - mean_dh - hr[i] * mean_dh_h);
  }
}

template <typename T>
void add_bias(int rows, int cols, const T* bias, T* x) {
  for (int r = 0; r < rows; ++r) {
    T* xr = x + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) xr[c] += bias[c];
  }
}

template <typename T>
void column_sums(int rows, int cols, const T* x, T* out) {
  for (int r = 0; r < rows; ++r) {
    const T* xr = x + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) out[c] += xr[c];
  }
}

template <typename T>
T gelu(T x) {
  const T u = static_cast<T>(kGeluC) * (x + static_cast<T>(kGeluA) * x * x * x);
  return T(0.5) * x * (T(1) + std::tanh(u));
}

template <typename T>
T gelu_grad(T x) {
  const T u = static_cast<T>(kGeluC) * (x + static_cast<T>(kGeluA) * x * x * x);
  const T t = std::tanh(u);
  const T du = static_cast<T>(kGeluC) * (T(1) + static_cast<T>(3 * kGeluA) * x * x);
  return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * du;
}

}  // namespace

template <typename T>
void forward(const TransformerParams<T>& params, const TokenBatch<T>& tokens, ForwardTrace<T>& tr) {
  const TransformerConfig& cfg = params.config();
  const ParamLayout& lay = params.layout();
  const T* w = params.data().data();
  const int B = tokens.batch;
  const int L = tokens.length;
  const int d = cfg.d_embd;
  const int A = cfg.num_arms;
  const int H = cfg.n_heads;
  const int hd = cfg.head_dim();
  if (B < 0 || L < 0) fail(ErrorKind::ShapeMismatch, "negative token batch shape");
  if (L > cfg.context_len) fail(ErrorKind::ContextOverflow, "token count exceeds context_len");
  const std::size_t pairs = static_cast<std::size_t>(B) * static_cast<std::size_t>(L > 0 ? L - 1 : 0);
  if (tokens.actions.size() != pairs || tokens.rewards.size() != pairs) {
    fail(ErrorKind::ShapeMismatch, "token arrays do not match batch x (length - 1)");
  }
  for (int a : tokens.actions) {
    if (a < 0 || a >= A) fail(ErrorKind::IndexOutOfRange, "token action out of range");
  }

  tr.params_id = &params;
  tr.params_version = params.version();
  tr.tokens = tokens;
  const int N = B * L;
  const std::size_t nd = static_cast<std::size_t>(N) * d;

  std::vector<T> x(nd);
  for (int b = 0; b < B; ++b) {
    for (int p = 0; p < L; ++p) {
      T* xr = x.data() + (static_cast<std::size_t>(b) * L + p) * d;
      const T* pos = w + lay.pos + static_cast<std::size_t>(p) * d;
      if (p == 0) {
        for (int i = 0; i < d; ++i) xr[i] = w[lay.start + i] + pos[i];
      } else {
        const std::size_t k = static_cast<std::size_t>(b) * (L - 1) + (p - 1);
        const T* emb = w + lay.w_in + static_cast<std::size_t>(tokens.actions[k]) * d;
        const T* rew = w + lay.w_in + static_cast<std::size_t>(A) * d;
        const T r = tokens.rewards[k];
        for (int i = 0; i < d; ++i) xr[i] = emb[i] + r * rew[i] + w[lay.b_in + i] + pos[i];
      }
    }
  }

  const T scale = T(1) / std::sqrt(static_cast<T>(hd));
  tr.layers.resize(static_cast<std::size_t>(cfg.n_layers));
  for (int l = 0; l < cfg.n_layers; ++l) {
    const ParamLayout::Block& bl = lay.blocks[static_cast<std::size_t>(l)];
    auto& c = tr.layers[static_cast<std::size_t>(l)];
    c.x_in = x;
    resize(c.ln1_hat, nd);
    resize(c.ln1_rstd, static_cast<std::size_t>(N));
    resize(c.ln1_out, nd);
    layer_norm(N, d, x.data(), w + bl.ln1_g, w + bl.ln1_b, c.ln1_hat.data(), c.ln1_rstd.data(), c.ln1_out.data());

    resize(c.qkv, nd * 3);
    kernels::gemm_nn(N, 3 * d, d, c.ln1_out.data(), d, w + bl.w_qkv, 3 * d, c.qkv.data(), 3 * d);
    add_bias(N, 3 * d, w + bl.b_qkv, c.qkv.data());

    resize(c.probs, static_cast<std::size_t>(B) * H * L * L);
    resize(c.attn, nd);
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        const T* q = c.qkv.data() + static_cast<std::size_t>(b) * L * 3 * d + h * hd;
        const T* k = q + d;
        const T* v = q + 2 * d;
        T* s = c.probs.data() + (static_cast<std::size_t>(b) * H + h) * L * L;
        kernels::gemm_nt(L, L, hd, q, 3 * d, k, 3 * d, s, L);
        for (int i = 0; i < L; ++i) {
          T* row = s + static_cast<std::size_t>(i) * L;
          T mx = -std::numeric_limits<T>::infinity();
          for (int j = 0; j <= i; ++j) {
            row[j] *= scale;
            mx = std::max(mx, row[j]);
          }
          T sum = 0;
          for (int j = 0; j <= i; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
          }
          for (int j = 0; j <= i; ++j) row[j] /= sum;
          for (int j = i + 1; j < L; ++j) row[j] = 0;
        }
        T* o = c.attn.data() + static_cast<std::size_t>(b) * L * d + h * hd;
        kernels::gemm_nn(L, hd, L, s, L, v, 3 * d, o, d);
      }
    }

    c.x_mid = c.x_in;
    kernels::gemm_nn(N, d, d, c.attn.data(), d, w + bl.w_out, d, c.x_mid.data(), d, true);
    add_bias(N, d, w + bl.b_out, c.x_mid.data());

    resize(c.ln2_hat, nd);
    resize(c.ln2_rstd, static_cast<std::size_t>(N));
    resize(c.ln2_out, nd);
    layer_norm(N, d, c.x_mid.data(), w + bl.ln2_g, w + bl.ln2_b, c.ln2_hat.data(), c.ln2_rstd.data(),
               c.ln2_out.data());

    resize(c.up, nd * 4);
    kernels::gemm_nn(N, 4 * d, d, c.ln2_out.data(), d, w + bl.w_up, 4 * d, c.up.data(), 4 * d);
    add_bias(N, 4 * d, w + bl.b_up, c.up.data());
    resize(c.act, nd * 4);
    for (std::size_t i = 0; i < c.up.size(); ++i) c.act[i] = gelu(c.up[i]);

    x = c.x_mid;
    kernels::gemm_nn(N, d, 4 * d, c.act.data(), 4 * d, w + bl.w_down, d, x.data(), d, true);
    add_bias(N, d, w + bl.b_down, x.data());
  }

  tr.x_final = std::move(x);
  resize(tr.lnf_hat, nd);
  resize(tr.lnf_rstd, static_cast<std::size_t>(N));
  resize(tr.lnf_out, nd);
  layer_norm(N, d, tr.x_final.data(), w + lay.lnf_g, w + lay.lnf_b, tr.lnf_hat.data(), tr.lnf_rstd.data(),
             tr.lnf_out.data());
  const std::size_t na = static_cast<std::size_t>(N) * A;
  resize(tr.reward_logits, na);
  resize(tr.action_logits, na);
  kernels::gemm_nn(N, A, d, tr.lnf_out.data(), d, w + lay.reward_w, A, tr.reward_logits.data(), A);
  add_bias(N, A, w + lay.reward_b, tr.reward_logits.data());
  kernels::gemm_nn(N, A, d, tr.lnf_out.data(), d, w + lay.action_w, A, tr.action_logits.data(), A);
  add_bias(N, A, w + lay.action_b, tr.action_logits.data());
}

template <typename T>
ForwardTrace<T> forward(const TransformerParams<T>& params, const TokenBatch<T>& tokens) {
  ForwardTrace<T> tr;
  forward(params, tokens, tr);
  return tr;
}

template <typename T>
void backward(const TransformerParams<T>& params, const ForwardTrace<T>& tr, std::span<const T> d_reward,
              std::span<const T> d_action, std::span<T> grads) {
  if (tr.params_id != &params || tr.params_version != params.version()) {
    fail(ErrorKind::StaleTrace, "forward trace does not belong to the current parameters");
  }
  const TransformerConfig& cfg = params.config();
  const ParamLayout& lay = params.layout();
  const T* w = params.data().data();
  T* g = grads.data();
  const int B = tr.tokens.batch;
  const int L = tr.tokens.length;
  const int N = B * L;
  const int d = cfg.d_embd;
  const int A = cfg.num_arms;
  const int H = cfg.n_heads;
  const int hd = cfg.head_dim();
  const std::size_t nd = static_cast<std::size_t>(N) * d;
  const std::size_t na = static_cast<std::size_t>(N) * A;
  if (grads.size() != params.size()) fail(ErrorKind::ShapeMismatch, "gradient buffer has the wrong size");
  if ((!d_reward.empty() && d_reward.size() != na) || (!d_action.empty() && d_action.size() != na)) {
    fail(ErrorKind::ShapeMismatch, "head gradient has the wrong size");
  }

  std::vector<T> dy(nd, T(0));
  if (!d_reward.empty()) {
    kernels::gemm_tn(d, A, N, tr.lnf_out.data(), d, d_reward.data(), A, g + lay.reward_w, A, true);
    column_sums(N, A, d_reward.data(), g + lay.reward_b);
    kernels::gemm_nt(N, d, A, d_reward.data(), A, w + lay.reward_w, A, dy.data(), d, true);
  }
  if (!d_action.empty()) {
    kernels::gemm_tn(d, A, N, tr.lnf_out.data(), d, d_action.data(), A, g + lay.action_w, A, true);
    column_sums(N, A, d_action.data(), g + lay.action_b);
    kernels::gemm_nt(N, d, A, d_action.data(), A, w + lay.action_w, A, dy.data(), d, true);
  }
  std::vector<T> dx(nd, T(0));
  layer_norm_backward(N, d, dy.data(), tr.lnf_hat.data(), tr.lnf_rstd.data(), w + lay.lnf_g, dx.data(),
                      g + lay.lnf_g, g + lay.lnf_b);

  std::vector<T> d_act(nd * 4);
  std::vector<T> d_qkv(nd * 3);
  std::vector<T> d_attn(nd);
  std::vector<T> dp(static_cast<std::size_t>(L) * L);
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));
  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const ParamLayout::Block& bl = lay.blocks[static_cast<std::size_t>(l)];
    const auto& c = tr.layers[static_cast<std::size_t>(l)];

    kernels::gemm_tn(4 * d, d, N, c.act.data(), 4 * d, dx.data(), d, g + bl.w_down, d, true);
    column_sums(N, d, dx.data(), g + bl.b_down);
    kernels::gemm_nt(N, 4 * d, d, dx.data(), d, w + bl.w_down, d, d_act.data(), 4 * d);
    for (std::size_t i = 0; i < d_act.size(); ++i) d_act[i] *= gelu_grad(c.up[i]);
    kernels::gemm_tn(d, 4 * d, N, c.ln2_out.data(), d, d_act.data(), 4 * d, g + bl.w_up, 4 * d, true);
    column_sums(N, 4 * d, d_act.data(), g + bl.b_up);
    kernels::gemm_nt(N, d, 4 * d, d_act.data(), 4 * d, w + bl.w_up, 4 * d, dy.data(), d);
    layer_norm_backward(N, d, dy.data(), c.ln2_hat.data(), c.ln2_rstd.data(), w + bl.ln2_g, dx.data(),
                        g + bl.ln2_g, g + bl.ln2_b);

    kernels::gemm_tn(d, d, N, c.attn.data(), d, dx.data(), d, g + bl.w_out, d, true);
    column_sums(N, d, dx.data(), g + bl.b_out);
    kernels::gemm_nt(N, d, d, dx.data(), d, w + bl.w_out, d, d_attn.data(), d);

    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        const std::size_t base = static_cast<std::size_t>(b) * L * 3 * d + h * hd;
        const T* q = c.qkv.data() + base;
        const T* k = q + d;
        const T* v = q + 2 * d;
        T* dq = d_qkv.data() + base;
        T* dk = dq + d;
        T* dv = dq + 2 * d;
        const T* p = c.probs.data() + (static_cast<std::size_t>(b) * H + h) * L * L;
        const T* d_o = d_attn.data() + static_cast<std::size_t>(b) * L * d + h * hd;
        kernels::gemm_nt(L, L, hd, d_o, d, v, 3 * d, dp.data(), L);
        kernels::gemm_tn(L, hd, L, p, L, d_o, d, dv, 3 * d);
        for (int i = 0; i < L; ++i) {
          const T* pr = p + static_cast<std::size_t>(i) * L;
          T* dr = dp.data() + static_cast<std::size_t>(i) * L;
          T inner = 0;
          for (int j = 0; j <= i; ++j) inner += pr[j] * dr[j];
          for (int j = 0; j <= i; ++j) dr[j] = pr[j] * (dr[j] - inner) * scale;
          for (int j = i + 1; j < L; ++j) dr[j] = 0;
        }
        kernels::gemm_nn(L, hd, L, dp.data(), L, k, 3 * d, dq, 3 * d);
        kernels::gemm_tn(L, hd, L, dp.data(), L, q, 3 * d, dk, 3 * d);
      }
    }
    kernels::gemm_tn(d, 3 * d, N, c.ln1_out.data(), d, d_qkv.data(), 3 * d, g + bl.w_qkv, 3 * d, true);
    column_sums(N, 3 * d, d_qkv.data(), g + bl.b_qkv);
    kernels::gemm_nt(N, d, 3 * d, d_qkv.data(), 3 * d, w + bl.w_qkv, 3 * d, dy.data(), d);
    layer_norm_backward(N, d, dy.data(), c.ln1_hat.data(), c.ln1_rstd.data(), w + bl.ln1_g, dx.data(),
                        g + bl.ln1_g, g + bl.ln1_b);
  }

  for (int b = 0; b < B; ++b) {
    for (int p = 0; p < L; ++p) {
      const T* dr = dx.data() + (static_cast<std::size_t>(b) * L + p) * d;
      T* gpos = g + lay.pos + static_cast<std::size_t>(p) * d;
      for (int i = 0; i < d; ++i) gpos[i] += dr[i];
      if (p == 0) {
        for (int i = 0; i < d; ++i) g[lay.start + i] += dr[i];
      } else {
        const std::size_t k = static_cast<std::size_t>(b) * (L - 1) + (p - 1);
        T* gemb = g + lay.w_in + static_cast<std::size_t>(tr.tokens.actions[k]) * d;
        T* grew = g + lay.w_in + static_cast<std::size_t>(A) * d;
        const T r = tr.tokens.rewards[k];
        for (int i = 0; i < d; ++i) {
          gemb[i] += dr[i];
          grew[i] += r * dr[i];
          g[lay.b_in + i] += dr[i];
        }
      }
    }
  }
}

template void forward<float>(const TransformerParams<float>&, const TokenBatch<float>&, ForwardTrace<float>&);
template void forward<double>(const TransformerParams<double>&, const TokenBatch<double>&, ForwardTrace<double>&);
template ForwardTrace<float> forward<float>(const TransformerParams<float>&, const TokenBatch<float>&);
template ForwardTrace<double> forward<double>(const TransformerParams<double>&, const TokenBatch<double>&);
template void backward<float>(const TransformerParams<float>&, const ForwardTrace<float>&, std::span<const float>,
                              std::span<const float>, std::span<float>);
template void backward<double>(const TransformerParams<double>&, const ForwardTrace<double>&,
                               std::span<const double>, std::span<const double>, std::span<double>);

}  // namespace bandit_icl
