#pragma once

#include <cstddef>
#include <functional>

namespace weakclock {

/// Worker count from WEAKCLOCK_WORKERS, falling back to 1.
int default_workers();

/// Runs body(i) for i in [0, n) on up to `workers` threads. Indices are
/// handed out in contiguous blocks; callers write results into slot i so the
/// merge order never depends on completion order. The first exception thrown
/// by any body is rethrown on the calling thread.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

}  // namespace weakclock
