#pragma once

// Deterministic chunked gradient reduction shared by the solvers.

#include "semigroup/mlp.hpp"
#include "semigroup/parallel.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace semigroup::detail {

/// Chunks are grouped into fixed slots; each slot owns one gradient
/// accumulator, and slots are summed in order.
inline constexpr std::size_t kChunksPerSlot = 8;

struct SlotAccumulator
{
  Eigen::VectorXd grad;
  std::array<double, 6> sums{};
};

struct Workspace
{
  ForwardCache cache0, cache1;
  Eigen::VectorXd u0, u1, seeds0, seeds1;
  Eigen::MatrixXd points;
};

/// Calls fn(begin, len, slot, workspace) for every chunk of [0, n) and
/// returns the ordered sum of all slot accumulators.
template <class ChunkFn>
SlotAccumulator reduce_chunks(Eigen::Index n, Eigen::Index params, ChunkFn&& fn)
{
  const std::size_t chunks = chunk_count(static_cast<std::size_t>(n));
  const std::size_t slots = (chunks + kChunksPerSlot - 1) / kChunksPerSlot;
  std::vector<SlotAccumulator> acc(slots);
  parallel_chunks(slots, [&](std::size_t s, int) {
    SlotAccumulator& slot = acc[s];
    slot.grad = Eigen::VectorXd::Zero(params);
    thread_local Workspace ws;
    const std::size_t c_end = std::min(chunks, (s + 1) * kChunksPerSlot);
    for (std::size_t c = s * kChunksPerSlot; c < c_end; ++c) {
      const auto begin = static_cast<Eigen::Index>(c * kChunkSize);
      const Eigen::Index len = std::min<Eigen::Index>(kChunkSize, n - begin);
      fn(begin, len, slot, ws);
    }
  });
  SlotAccumulator total;
  total.grad = Eigen::VectorXd::Zero(params);
  for (const auto& slot : acc) {
    total.grad += slot.grad;
    for (std::size_t i = 0; i < total.sums.size(); ++i)
      total.sums[i] += slot.sums[i];
  }
  return total;
}

} // namespace semigroup::detail
