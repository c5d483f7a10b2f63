#include <cmath>
#include <limits>

#include "bandit_icl/demonstrators.hpp"
#include "bandit_icl/error.hpp"

namespace bandit_icl {

int ts_step(const ArmStats& stats, double sigma_sq, Rng& rng) {
  if (!(sigma_sq > 0.0)) fail(ErrorKind::InvalidArgument, "ts_step: sigma_sq must be positive");
  int best = 0;
  double best_draw = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < stats.num_arms(); ++a) {
    double draw;
    if (stats.counts[a] > 0) {
      draw = rng.normal(stats.mean(a), std::sqrt(sigma_sq / stats.counts[a]));
    } else {
      draw = rng.normal();
    }
    if (draw > best_draw) {
      best_draw = draw;
      best = a;
    }
  }
  return best;
}

}  // namespace bandit_icl
