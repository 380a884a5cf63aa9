#pragma once

#include <functional>

namespace hef {

// Global worker count for data-parallel kernels (default 1 = serial).
void set_thread_count(int k);
int thread_count();

// Runs fn(begin, end) over a fixed partition of [0, n) into 4096-element
// chunks. The partition never depends on the worker count, so any reduction
// that combines per-chunk results in chunk order is bit-identical for every
// thread count.
void parallel_for(long n, const std::function<void(long, long)>& fn);

}  // namespace hef
