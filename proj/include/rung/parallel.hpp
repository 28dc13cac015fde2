#pragma once

#include <cstddef>
#include <functional>

namespace rung {

// Worker count: RUNG_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t thread_count();

// Calls fn(i) for every i in [0, n) on up to thread_count() threads. Callers
// write results into per-index slots, so the outcome does not depend on the
// schedule. The first exception thrown by any call is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace rung
