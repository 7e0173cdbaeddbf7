#pragma once

#include <cstddef>
#include <functional>

namespace alignkit {

// Worker count: ALIGNKIT_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t thread_budget();

// Runs body(i) for i in [0, n). Each index is executed exactly once; callers
// write results into per-index slots so output never depends on scheduling.
// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace alignkit
