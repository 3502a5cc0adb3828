#pragma once

#include <cstdint>
#include <functional>

namespace mce {

// Runs body(k) for k in [0, n) on up to `jobs` threads. The first exception
// thrown by any task is rethrown after all workers stop.
void parallel_for(int n, int jobs, const std::function<void(int)>& body);

// Deterministic uniform in [0, 1) from a 64-bit generator state; kept
// separate from <random> distributions so draws are identical across
// standard libraries.
double unit_uniform(std::uint64_t bits);

}  // namespace mce
