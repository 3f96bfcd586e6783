#pragma once

#include <cstddef>
#include <functional>

namespace aquad {

/// Worker count: hardware concurrency, capped by AQUAD_THREADS when set.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) over worker_count() threads. Each index runs
/// exactly once; callers write results by index so output order is fixed.
/// The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace aquad
