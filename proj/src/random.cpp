#include "semigroup/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace semigroup {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key)
{
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::uint64_t stream_id(Purpose purpose, std::uint64_t iteration, std::uint64_t index)
{
  if (iteration >= (1ull << 24) || index >= (1ull << 32))
    throw std::out_of_range("stream_id: iteration or index out of range");
  return (static_cast<std::uint64_t>(purpose) << 56) | (iteration << 32) | index;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t id) : seed_(seed), id_(id) {}

void RngStream::refill()
{
  const std::array<std::uint32_t, 4> ctr = {
    static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
    static_cast<std::uint32_t>(id_), static_cast<std::uint32_t>(id_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  const auto out = philox4x32(ctr, key);
  block_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  block_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  block_pos_ = 0;
  ++counter_;
}

std::uint64_t RngStream::next_u64()
{
  if (block_pos_ == 2)
    refill();
  return block_[block_pos_++];
}

double RngStream::uniform()
{
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open0()
{
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::normal()
{
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform_open0();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

void RngStream::normals(std::span<double> out)
{
  for (double& z : out)
    z = normal();
}

void brownian_increment(RngStream& stream, double dt, std::span<double> out)
{
  if (!(dt > 0.0))
    throw std::invalid_argument("brownian_increment: time step must be positive");
  if (out.empty())
    throw std::invalid_argument("brownian_increment: dimension must be at least 1");
  const double scale = std::sqrt(dt);
  for (double& w : out)
    w = scale * stream.normal();
}

} // namespace semigroup
