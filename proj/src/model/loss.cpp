#include <algorithm>
#include <cmath>

#include "bandit_icl/demonstrators.hpp"
#include "bandit_icl/error.hpp"
#include "bandit_icl/transformer.hpp"

namespace bandit_icl {

template <typename T>
LossTargets<T> loss_targets(std::span<const Trajectory* const> trajs, DptTarget dpt_target) {
  LossTargets<T> out;
  for (const Trajectory* t : trajs) {
    out.actions.insert(out.actions.end(), t->actions.begin(), t->actions.end());
    for (double r : t->rewards) out.rewards.push_back(static_cast<T>(r));
    out.best.push_back(dpt_target == DptTarget::TrueOptimal ? t->optimal_action : approx_optimal_action(*t));
  }
  return out;
}

template <typename T>
double loss_sum(LossMode mode, const ForwardTrace<T>& tr, const LossTargets<T>& targets, T scale,
                std::span<T> d_reward, std::span<T> d_action) {
  const int B = tr.tokens.batch;
  const int L = tr.tokens.length;
  const std::size_t rows = static_cast<std::size_t>(B) * L;
  const std::size_t A = rows ? tr.reward_logits.size() / rows : 0;
  if (targets.actions.size() != rows || targets.rewards.size() != rows || targets.best.size() != static_cast<std::size_t>(B)) {
    fail(ErrorKind::ShapeMismatch, "loss targets do not match the forward pass");
  }
  const bool want_grad = !d_reward.empty() || !d_action.empty();
  if (want_grad) {
    std::fill(d_reward.begin(), d_reward.end(), T(0));
    std::fill(d_action.begin(), d_action.end(), T(0));
  }
  double total = 0.0;
  const double inv_n = L > 0 ? 1.0 / L : 0.0;
  std::vector<double> probs(A);
  for (int b = 0; b < B; ++b) {
    double seq = 0.0;
    for (int p = 0; p < L; ++p) {
      const std::size_t row = static_cast<std::size_t>(b) * L + p;
      if (mode == LossMode::PreDeToR) {
        const std::size_t arm = static_cast<std::size_t>(targets.actions[row]);
        const double diff = static_cast<double>(tr.reward_logits[row * A + arm]) - targets.rewards[row];
        seq += diff * diff;
        if (!d_reward.empty()) d_reward[row * A + arm] = static_cast<T>(scale * 2.0 * inv_n * diff);
      } else {
        const int target = mode == LossMode::DPT ? targets.best[static_cast<std::size_t>(b)] : targets.actions[row];
        const T* logits = tr.action_logits.data() + row * A;
        double mx = -INFINITY;
        for (std::size_t a = 0; a < A; ++a) mx = std::max(mx, static_cast<double>(logits[a]));
        double z = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          probs[a] = std::exp(static_cast<double>(logits[a]) - mx);
          z += probs[a];
        }
        seq += std::log(z) + mx - static_cast<double>(logits[static_cast<std::size_t>(target)]);
        if (!d_action.empty()) {
          for (std::size_t a = 0; a < A; ++a) {
            const double onehot = static_cast<int>(a) == target ? 1.0 : 0.0;
            d_action[row * A + a] = static_cast<T>(scale * inv_n * (probs[a] / z - onehot));
          }
        }
      }
    }
    total += seq * inv_n;
  }
  return total;
}

template <typename T>
double loss(LossMode mode, const ForwardTrace<T>& tr, const LossTargets<T>& targets) {
  if (tr.tokens.batch == 0) return 0.0;
  return loss_sum<T>(mode, tr, targets, T(1), {}, {}) / tr.tokens.batch;
}

#define BANDIT_ICL_INSTANTIATE(T)                                                                                  \
  template LossTargets<T> loss_targets<T>(std::span<const Trajectory* const>, DptTarget);                          \
  template double loss_sum<T>(LossMode, const ForwardTrace<T>&, const LossTargets<T>&, T, std::span<T>,           \
                              std::span<T>);                                                                       \
  template double loss<T>(LossMode, const ForwardTrace<T>&, const LossTargets<T>&);
BANDIT_ICL_INSTANTIATE(float)
BANDIT_ICL_INSTANTIATE(double)
#undef BANDIT_ICL_INSTANTIATE

}  // namespace bandit_icl
