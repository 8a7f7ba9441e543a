#pragma once

#include <cstddef>
#include <functional>

namespace fomin {

/// Worker count from FOMINLAB_WORKERS, falling back to the hardware
/// concurrency (at least 1).
int worker_count();

/// Calls body(i) for i in [0, n). Work is split into contiguous blocks across
/// worker_count() threads; callers store results by index, so the outcome does
/// not depend on the schedule. The first exception thrown by any worker is
/// rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fomin
