#pragma once

#include <cstddef>
#include <functional>

namespace lrcox {

/// Worker count from LRCOX_WORKERS (default 1, clamped to >= 1).
std::size_t worker_count();

/// Calls body(i) for i in [0, n). Iterations must write disjoint state;
/// results are then independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lrcox
