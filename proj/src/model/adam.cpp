#include <cmath>

#include "bandit_icl/error.hpp"
#include "bandit_icl/transformer.hpp"

namespace bandit_icl {

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState& s, double lr) {
  if (params.size() != grads.size()) fail(ErrorKind::ShapeMismatch, "adam: gradient size mismatch");
  if (s.m.size() != params.size()) {
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    const double m_hat = s.m[i] / c1;
    const double v_hat = s.v[i] / c2;
    params[i] = static_cast<T>(params[i] - lr * m_hat / (std::sqrt(v_hat) + s.eps));
  }
}

template void adam_step<float>(std::span<float>, std::span<const float>, AdamState&, double);
template void adam_step<double>(std::span<double>, std::span<const double>, AdamState&, double);

}  // namespace bandit_icl
