#pragma once

#include <cstddef>
#include <functional>

namespace semigroup {

/// Caps the number of threads used by parallel_chunks. 0 selects all cores.
void set_worker_count(int workers);
int worker_count();

/// Calls fn(chunk, worker) for every chunk in [0, chunks). Chunks are
/// claimed dynamically, so callers must write per-chunk results to
/// per-chunk slots and reduce them in chunk order to stay deterministic.
/// `worker` is in [0, worker_count()) and identifies per-thread scratch.
/// The first exception thrown by any call is rethrown after all threads join.
void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t, int)>& fn);

/// Fixed chunk length used by all batched estimators. Results do not
/// depend on the worker count because the chunking does not.
inline constexpr std::size_t kChunkSize = 1024;

inline std::size_t chunk_count(std::size_t n)
{
  return (n + kChunkSize - 1) / kChunkSize;
}

} // namespace semigroup
