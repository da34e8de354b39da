#pragma once

#include <functional>

namespace smoothmatch {

/// Worker count: SMOOTHMATCH_THREADS if set and positive, else hardware concurrency.
int max_threads();

/// Splits [0, n) into contiguous chunks, one per worker. Chunk boundaries depend only on n
/// and the worker count, so results written per index are deterministic.
void parallel_for(int n, const std::function<void(int begin, int end)>& body);

} // namespace smoothmatch
