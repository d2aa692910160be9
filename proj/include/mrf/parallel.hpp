#pragma once

#include <cstddef>
#include <functional>

namespace mrf {

/// Worker cap: ZZB_MRF_THREADS environment variable; 0 or unset means
/// hardware concurrency.
std::size_t max_threads();

/// Runs fn(i) for i in [0, n) over contiguous chunks. Each index must write
/// only its own output slot, which keeps results independent of the thread
/// count and of execution order. Nested calls run serially on the caller's
/// thread. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace mrf
