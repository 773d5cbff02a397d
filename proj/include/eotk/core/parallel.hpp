#pragma once

#include <cstddef>
#include <functional>

namespace eotk {

/// Worker count for data-parallel loops: `EOTK_NUM_THREADS` if set, else the
/// hardware concurrency.
std::size_t default_thread_count();

/// Calls fn(i) for every i in [0, n) across up to `threads` threads, in
/// contiguous static chunks. Callers must write results to per-index slots;
/// the first exception thrown by any fn(i) is rethrown after all threads join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads = default_thread_count());

}  // namespace eotk
