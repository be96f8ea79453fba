#pragma once

#include <cstddef>
#include <functional>

namespace reddsc {

/// Runs fn(0..n-1) on up to `workers` threads. Results must be written to
/// index-addressed slots so assembly stays order-independent. The first
/// exception, if any, is rethrown after all threads join. workers <= 1 runs
/// inline.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace reddsc
