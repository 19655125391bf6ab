#pragma once

#include <cstddef>
#include <functional>

namespace pcl {

// Worker cap: PCL_THREADS env var, defaulting to the hardware thread count.
std::size_t worker_count();

// Runs fn(i) for i in [0, n). fn must only write to per-index slots; results
// are then identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pcl
