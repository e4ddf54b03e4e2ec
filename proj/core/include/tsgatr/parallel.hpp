#pragma once

#include <cstddef>
#include <functional>

namespace tsgatr {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Callers write
/// results into pre-sized slots, so output never depends on scheduling.
/// If any call throws, the exception from the lowest index is rethrown
/// after all workers have joined.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace tsgatr
