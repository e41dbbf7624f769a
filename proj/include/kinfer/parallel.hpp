#pragma once

#include <cstddef>
#include <functional>

namespace kinfer {

// Worker cap from KERNEL_INFER_THREADS, else the hardware concurrency.
int worker_count();

// Runs body(0), ..., body(n - 1) on up to worker_count() threads. Each index
// runs exactly once; the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace kinfer
