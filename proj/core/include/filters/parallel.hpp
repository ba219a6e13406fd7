#pragma once

#include <cstddef>
#include <functional>

namespace filters {

/// Number of worker threads used by parallel_for. Resolution order:
/// FILTERS_THREADS environment variable, then the explicit request, then 1.
/// Returns at least 1.
int resolve_threads(int requested);

/// Runs fn(i) for i in [0, n) on up to `threads` threads using a static
/// contiguous partition. Each index is visited exactly once and writes only
/// to its own slot in caller-owned storage, so results do not depend on the
/// thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace filters
