#pragma once

#include <cstddef>
#include <functional>

namespace dvars {

/// Worker count from DVARS_THREADS, else the hardware concurrency (at least 1).
[[nodiscard]] unsigned default_worker_count();

/// Resolves 0 to default_worker_count().
[[nodiscard]] unsigned resolve_workers(unsigned requested);

/**
 * Runs body(task) for task in [0, tasks) on up to `workers` threads.
 *
 * Tasks are claimed dynamically, so callers must write results into
 * task-indexed slots and combine them afterwards in a fixed order; that is
 * what keeps results independent of the worker count. The first exception
 * thrown by any task is rethrown on the calling thread.
 */
void parallel_for(std::size_t tasks, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace dvars
