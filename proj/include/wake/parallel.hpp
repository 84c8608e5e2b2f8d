#pragma once

#include <cstddef>
#include <functional>

namespace wake {

/// Worker count: WAKE_LATENT_THREADS if set and positive, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each index
/// must write only to its own output slot; results are then independent of
/// the thread count. Exceptions are rethrown on the calling thread (the one
/// with the lowest index wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace wake
