#pragma once

#include <cstddef>
#include <functional>

namespace errloc {

/// Runs fn(i) for i in [0, n) on up to `workers` threads (0 = hardware
/// concurrency). Work items must write only to their own output slot; the
/// first exception thrown by any item is rethrown after all threads join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t workers = 0);

}  // namespace errloc
