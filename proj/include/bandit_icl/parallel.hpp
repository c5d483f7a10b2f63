#pragma once

#include <cstddef>
#include <functional>

namespace bandit_icl {

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
/// processed exactly once; callers write results into per-index slots so the
/// outcome does not depend on the worker count.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

}  // namespace bandit_icl
