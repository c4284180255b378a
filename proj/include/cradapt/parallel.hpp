#pragma once

#include <cstddef>
#include <functional>

namespace cradapt {

/// Worker count: CR_ADAPT_THREADS if set and positive, else hardware concurrency.
unsigned thread_count();

/// Runs body(i) for i in [0, n) over contiguous chunks. Each index is visited
/// exactly once, so writes to per-index slots stay deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace cradapt
