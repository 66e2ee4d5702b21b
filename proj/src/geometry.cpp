#include "semigroup/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace semigroup {

namespace {

double squared_norm(std::span<const double> x)
{
  double s = 0.0;
  for (double v : x)
    s += v * v;
  return s;
}

} // namespace

bool Domain::contains(std::span<const double> x) const
{
  if (kind == DomainKind::torus)
    return true;
  return squared_norm(x) < 1.0;
}

std::string_view to_string(DomainKind kind)
{
  return kind == DomainKind::torus ? "torus" : "unit-ball";
}

void wrap_periodic(std::span<double> x)
{
  for (double& v : x) {
    if (!std::isfinite(v))
      throw std::invalid_argument("wrap_periodic: non-finite coordinate");
    v -= std::floor(v);
    // x - floor(x) rounds up to 1.0 for tiny negative x
    if (v >= 1.0)
      v = 0.0;
  }
}

StepExit classify_step(std::span<const double> x, std::span<const double> x_end,
                       std::span<double> exit_point)
{
  if (x.size() != x_end.size() || exit_point.size() != x.size())
    throw std::invalid_argument("classify_step: dimension mismatch");
  const double xx = squared_norm(x);
  if (!(xx < 1.0))
    throw std::invalid_argument("classify_step: start point is not inside the unit ball");
  if (squared_norm(x_end) < 1.0)
    return {};

  // |x + t v|^2 = 1 with v = x_end - x: a t^2 + 2 b t + (xx - 1) = 0, xx < 1
  // so the roots have opposite signs and the positive one is wanted.
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x_end[i] - x[i];
    a += v * v;
    b += x[i] * v;
  }
  const double c = xx - 1.0;
  const double disc = std::sqrt(b * b - a * c);
  // Cancellation-free form of (-b + disc) / a.
  double t = b > 0.0 ? -c / (b + disc) : (disc - b) / a;
  if (t > 1.0)
    t = 1.0;

  // One Newton step on |x + t v|^2 - 1 tightens the residual to rounding level.
  for (int iter = 0; iter < 2; ++iter) {
    double r2 = 0.0, slope = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = x_end[i] - x[i];
      const double p = x[i] + t * v;
      r2 += p * p;
      slope += 2.0 * p * v;
    }
    if (slope > 0.0)
      t = std::min(1.0, t - (r2 - 1.0) / slope);
  }

  for (std::size_t i = 0; i < x.size(); ++i)
    exit_point[i] = x[i] + t * (x_end[i] - x[i]);
  return {true, t};
}

StepExit classify_step(const Domain& domain, std::span<const double> x,
                       std::span<const double> x_end, std::span<double> exit_point)
{
  if (domain.is_torus())
    return {};
  return classify_step(x, x_end, exit_point);
}

} // namespace semigroup
