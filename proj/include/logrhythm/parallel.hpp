#pragma once

#include <cstddef>
#include <functional>

namespace logrhythm {

/// Worker count: hardware concurrency, capped by LOGRHYTHM_THREADS when set.
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Iterations are independent; callers that
/// reduce results must do so in index order afterwards.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace logrhythm
