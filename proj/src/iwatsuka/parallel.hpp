#pragma once

#include <cstddef>
#include <functional>

namespace iwatsuka {

/// Process-wide worker count used by the fiber sweeps. 0 selects
/// std::thread::hardware_concurrency().
void set_thread_count(unsigned n);
unsigned thread_count();

/// Calls body(i) for every i in [0, n). Each index is visited exactly once and
/// results must be written to per-index slots, so the outcome does not depend
/// on scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace iwatsuka
