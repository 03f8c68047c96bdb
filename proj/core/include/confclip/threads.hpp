#pragma once

#include <cstddef>
#include <functional>

namespace confclip {

// Worker count for parallel sections: the CONFCLIP_THREADS environment
// variable when set (0 means auto), otherwise the hardware concurrency.
int thread_count();

// Runs fn(i) for every i in [0, n) across thread_count() workers. Execution
// order is unspecified: bodies must touch disjoint state per index and draw
// randomness from per-index seeds, which keeps parallel runs bit-identical
// to serial ones. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace confclip
