#include "semigroup/random.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

using namespace semigroup;

TEST_CASE("philox4x32-10 known-answer vectors")
{
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) ==
        A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32(A4{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                   A2{0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32(A4{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                   A2{0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are pure functions of seed and id")
{
  RngStream a(7, stream_id(Purpose::pde_step, 3, 11));
  RngStream b(7, stream_id(Purpose::pde_step, 3, 11));
  for (int i = 0; i < 100; ++i)
    CHECK(a.next_u64() == b.next_u64());

  RngStream c(7, stream_id(Purpose::pde_step, 3, 12));
  RngStream d(8, stream_id(Purpose::pde_step, 3, 11));
  RngStream e(7, stream_id(Purpose::boundary, 3, 11));
  RngStream ref(7, stream_id(Purpose::pde_step, 3, 11));
  const auto r = ref.next_u64();
  CHECK(c.next_u64() != r);
  CHECK(d.next_u64() != r);
  CHECK(e.next_u64() != r);
}

TEST_CASE("stream ids keep purpose, iteration and index apart")
{
  std::set<std::uint64_t> ids;
  for (auto p : {Purpose::init, Purpose::pde_step, Purpose::test_set})
    for (std::uint64_t it : {0u, 1u, 0xffffffu})
      for (std::uint64_t k : {0u, 1u, 0xffffffffu})
        ids.insert(stream_id(p, it, k));
  CHECK(ids.size() == 27);
  CHECK_THROWS_AS(stream_id(Purpose::init, 1u << 24, 0), std::out_of_range);
  CHECK_THROWS_AS(stream_id(Purpose::init, 0, 1ull << 32), std::out_of_range);
}

TEST_CASE("uniform draws lie in [0, 1) and have the right moments")
{
  RngStream s(1, stream_id(Purpose::user, 0, 0));
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum_sq += u * u;
  }
  // 5 standard errors
  CHECK(std::abs(sum / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sum_sq / n - 1.0 / 3.0) < 5.0 * std::sqrt(4.0 / 45.0 / n));
  for (int i = 0; i < 1000; ++i) {
    const double v = s.uniform_open0();
    REQUIRE(v > 0.0);
    REQUIRE(v <= 1.0);
  }
}

TEST_CASE("normal draws match the first four moments")
{
  RngStream s(2, stream_id(Purpose::user, 0, 1));
  const int n = 400000;
  std::vector<double> z(n);
  s.normals(z);
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  for (double v : z) {
    m1 += v;
    m2 += v * v;
    m3 += v * v * v;
    m4 += v * v * v * v;
  }
  m1 /= n;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  // standard errors of the sample moments of N(0,1): 1, sqrt2, sqrt15, sqrt96
  const double se = 1.0 / std::sqrt(double(n));
  CHECK(std::abs(m1) < 5 * se);
  CHECK(std::abs(m2 - 1.0) < 5 * std::sqrt(2.0) * se);
  CHECK(std::abs(m3) < 5 * std::sqrt(15.0) * se);
  CHECK(std::abs(m4 - 3.0) < 5 * std::sqrt(96.0) * se);
}

TEST_CASE("brownian increments have variance dt per coordinate")
{
  RngStream s(3, stream_id(Purpose::user, 0, 2));
  const double dt = 1e-3;
  const int n = 100000;
  std::vector<double> w(4);
  double sum_sq = 0.0, cross = 0.0;
  for (int i = 0; i < n; ++i) {
    brownian_increment(s, dt, w);
    sum_sq += w[0] * w[0];
    cross += w[0] * w[1];
  }
  CHECK(std::abs(sum_sq / n / dt - 1.0) < 5 * std::sqrt(2.0 / n));
  CHECK(std::abs(cross / n / dt) < 5 / std::sqrt(double(n)));
  CHECK_THROWS_AS(brownian_increment(s, 0.0, w), std::invalid_argument);
  CHECK_THROWS_AS(brownian_increment(s, -1.0, w), std::invalid_argument);
  std::vector<double> empty;
  CHECK_THROWS_AS(brownian_increment(s, dt, empty), std::invalid_argument);
}
