#pragma once

#include <cstddef>
#include <functional>

namespace stommel {

/// Worker count: STOMMEL_DA_THREADS if set and positive, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Run body(i) for i in [0, n) on up to worker_count() threads. Each index
/// is processed exactly once; the first exception thrown by any worker is
/// rethrown after all workers have joined.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace stommel
