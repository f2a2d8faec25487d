#pragma once

#include <cstddef>
#include <functional>

namespace fragopt {

/// Worker count: FRAGOPT_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Calls body(i) for i in [0, n) on the worker pool. Each index is visited
/// exactly once; callers write results into per-index slots and reduce in
/// index order, so the outcome does not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fragopt
