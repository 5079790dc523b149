#pragma once

#include <cstddef>
#include <functional>

namespace d2e {

/// Kernel thread count, read once from D2E_THREADS (default 1).
std::size_t kernel_threads();
void set_kernel_threads(std::size_t n);

/// Runs fn(begin, end) over contiguous chunks of [0, n). Every index is owned
/// by exactly one chunk, so kernels that write disjoint outputs per index stay
/// bitwise deterministic for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace d2e
