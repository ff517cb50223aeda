#pragma once

#include <cstddef>
#include <functional>

namespace latticeforge {

/// Worker cap: LATTICEFORGE_THREADS if set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
std::size_t thread_limit();

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks so each
/// index is handled exactly once; callers write results by index, which keeps
/// output independent of scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace latticeforge
