#pragma once

#include <cstddef>
#include <functional>

namespace parastitch {

// Worker count: hardware concurrency, capped by PARASTITCH_THREADS when set.
unsigned worker_count();

// Runs fn(i) for i in [0, n) on up to worker_count() threads. Indices are
// handed out in contiguous blocks; fn must only write state owned by i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace parastitch
