#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace semigroup {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// What a stream is used for. Part of the stream id so that draws for
/// different purposes never overlap even with equal (iteration, index).
enum class Purpose : std::uint8_t
{
  init = 1,
  training_set = 2,
  pde_step = 3,
  boundary = 4,
  test_set = 5,
  mean_shift = 6,
  eigen_batch = 7,
  eigen_dual = 8,
  shuffle = 9,
  coefficients = 10,
  lambda_readout = 11,
  plot = 12,
  user = 255,
};

/// Structured stream id: purpose (8 bits) | iteration (24 bits) | index (32 bits).
std::uint64_t stream_id(Purpose purpose, std::uint64_t iteration, std::uint64_t index);

/// Counter-based random stream. The draw sequence is a pure function of
/// (seed, id); distinct ids give independent Philox counter ranges.
class RngStream
{
public:
  RngStream(std::uint64_t seed, std::uint64_t id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t id() const { return id_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open0();
  /// Standard normal via Box-Muller; draws come in cached pairs.
  double normal();
  void normals(std::span<double> out);

private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t id_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> block_{};
  int block_pos_ = 2;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// sqrt(dt) * z with z standard normal in dimension out.size().
/// Throws std::invalid_argument for dt <= 0 or an empty output.
void brownian_increment(RngStream& stream, double dt, std::span<double> out);

} // namespace semigroup
