#pragma once

#include <cstddef>
#include <functional>

namespace npvine {

/// Number of worker threads used by parallel_for (hardware concurrency, at least 1).
/// NPVINE_THREADS in the environment overrides it.
std::size_t worker_count() noexcept;

/// Calls body(i) for every i in [0, count), spread over worker_count() threads.
/// Results must be written to per-index slots so the outcome is independent of scheduling.
/// The first exception thrown by any call is rethrown after all workers stop.
/// Calls made from inside a body run serially on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace npvine
