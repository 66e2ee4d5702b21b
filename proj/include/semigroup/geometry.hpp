#pragma once

#include <span>
#include <string_view>

namespace semigroup {

enum class DomainKind
{
  unit_ball,
  torus,
};

struct Domain
{
  DomainKind kind = DomainKind::torus;
  int dim = 1;

  bool is_torus() const { return kind == DomainKind::torus; }
  /// Strict interior test for the ball; always true for the torus.
  bool contains(std::span<const double> x) const;
};

std::string_view to_string(DomainKind kind);

/// x_i - floor(x_i) in place. Throws std::invalid_argument on non-finite input.
void wrap_periodic(std::span<double> x);

/// Outcome of one Euler step against the unit sphere.
struct StepExit
{
  bool exited = false;
  /// Fraction t* in (0, 1] of the segment start -> end where it meets the sphere.
  double fraction = 1.0;
};

/// Classifies the segment x -> x_end for the unit ball. Exit is decided
/// from the endpoint only. On exit the crossing point is written to
/// `exit_point`, computed as x + t*(x_end - x).
/// Throws std::invalid_argument if x is not strictly inside the ball.
StepExit classify_step(std::span<const double> x, std::span<const double> x_end,
                       std::span<double> exit_point);

/// Torus overload: a periodic domain has no boundary to hit.
StepExit classify_step(const Domain& domain, std::span<const double> x,
                       std::span<const double> x_end, std::span<double> exit_point);

} // namespace semigroup
