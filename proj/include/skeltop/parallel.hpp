#pragma once

#include <cstddef>
#include <functional>

namespace skeltop {

/// Worker count: SKELTOP_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
/// visited exactly once; callers write results by index so the outcome does
/// not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace skeltop
