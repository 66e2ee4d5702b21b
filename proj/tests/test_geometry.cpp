#include "semigroup/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

using namespace semigroup;

TEST_CASE("wrap_periodic reduces to the unit cell")
{
  std::vector<double> x{1.25, -0.25, 1.0, 0.0, 3.0 - 1e-17, -1e-300};
  wrap_periodic(x);
  CHECK(x[0] == 0.25);
  CHECK(x[1] == 0.75);
  CHECK(x[2] == 0.0);
  CHECK(x[3] == 0.0);
  for (double v : x) {
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
  std::vector<double> bad{0.5, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(wrap_periodic(bad), std::invalid_argument);
  std::vector<double> inf{std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(wrap_periodic(inf), std::invalid_argument);
}

TEST_CASE("a step that stays inside the ball is interior")
{
  std::vector<double> x{0.1, 0.2}, y{0.3, -0.4}, exit(2);
  const StepExit r = classify_step(x, y, exit);
  CHECK_FALSE(r.exited);
  CHECK(r.fraction == 1.0);
}

TEST_CASE("exit point lies on the sphere along the segment")
{
  std::vector<double> x{0.0, 0.0}, y{2.0, 0.0}, exit(2);
  StepExit r = classify_step(x, y, exit);
  CHECK(r.exited);
  CHECK(r.fraction == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(exit[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(exit[1] == doctest::Approx(0.0));

  // a grazing step from near the boundary
  std::vector<double> a{0.6, 0.79}, b{0.61, 0.8}, e(2);
  r = classify_step(a, b, e);
  CHECK(r.exited);
  CHECK(std::hypot(e[0], e[1]) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.fraction > 0.0);
  CHECK(r.fraction <= 1.0);
  for (int i = 0; i < 2; ++i)
    CHECK(e[i] == doctest::Approx(a[i] + r.fraction * (b[i] - a[i])).epsilon(1e-14));
}

TEST_CASE("an endpoint exactly on the sphere counts as an exit")
{
  std::vector<double> x{0.0, 0.5}, y{0.0, 1.0}, exit(2);
  const StepExit r = classify_step(x, y, exit);
  CHECK(r.exited);
  CHECK(r.fraction == doctest::Approx(1.0));
}

TEST_CASE("classify_step rejects a start outside the open ball")
{
  std::vector<double> x{1.0, 0.0}, y{0.5, 0.0}, exit(2);
  CHECK_THROWS_AS(classify_step(x, y, exit), std::invalid_argument);
  std::vector<double> far{2.0, 0.0};
  CHECK_THROWS_AS(classify_step(far, y, exit), std::invalid_argument);
}

TEST_CASE("the torus has no exits")
{
  const Domain torus{DomainKind::torus, 2};
  std::vector<double> x{0.9, 0.1}, y{1.3, -0.2}, exit(2);
  CHECK_FALSE(classify_step(torus, x, y, exit).exited);
  const Domain ball{DomainKind::unit_ball, 2};
  CHECK(ball.contains(std::vector<double>{0.5, 0.5}));
  CHECK_FALSE(ball.contains(std::vector<double>{0.8, 0.6}));
  CHECK(to_string(DomainKind::unit_ball) != to_string(DomainKind::torus));
}
