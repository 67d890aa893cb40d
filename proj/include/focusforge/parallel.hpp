#pragma once

#include <cstddef>
#include <functional>

namespace focusforge {

/// Worker count from FOCUSFORGE_THREADS (0 or unset = hardware concurrency).
int worker_count();

/// Runs fn(0) .. fn(n - 1) on up to worker_count() threads. The first
/// exception thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace focusforge
