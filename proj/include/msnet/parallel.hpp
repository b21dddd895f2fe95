#pragma once

#include <cstddef>
#include <functional>

namespace msnet {

// Thread count from MSNET_THREADS, else std::thread::hardware_concurrency().
std::size_t default_thread_count();

// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default).
// Indices are handed out dynamically; callers write results to slot i, so the
// outcome never depends on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace msnet
