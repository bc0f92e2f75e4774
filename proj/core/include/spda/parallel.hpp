#pragma once

#include <cstddef>
#include <functional>

namespace spda {

/// Worker count used by `parallel_for`. Initialized from SPDA_THREADS
/// (0 or unset = hardware concurrency).
std::size_t thread_count();

/// Overrides the worker count for the current process (0 = hardware concurrency).
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n). Each index is processed exactly once; callers
/// write results into per-index slots so the outcome does not depend on scheduling.
/// The first exception thrown by any body is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace spda
