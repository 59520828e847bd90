#pragma once

#include <cstddef>
#include <functional>

namespace rdu {

// Worker count: `requested` if positive, else hardware concurrency, in both
// cases capped by the RD_UNIBAND_THREADS environment variable when set.
int thread_budget(int requested = 0);

// Runs fn(i) for i in [0, n_items) on a fixed pool. Work items must write to
// disjoint state; any exception is rethrown on the calling thread after join.
void parallel_for(std::size_t n_items, int n_threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace rdu
