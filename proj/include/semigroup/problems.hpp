#pragma once

#include "semigroup/geometry.hpp"
#include "semigroup/sampling.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace semigroup {

using ScalarField = std::function<double(std::span<const double>)>;

enum class CoefficientShape
{
  /// a(x) = prod_i factor(x_i)
  product,
  /// a(x) = factor(|x|)
  radial,
};

/// Diffusion coefficient a(x) > 0 together with the derivative of its log,
/// which gives the drift -grad V = grad log a of the sampling diffusion.
struct Coefficient
{
  CoefficientShape shape = CoefficientShape::product;
  std::function<double(double)> factor;
  /// d/dt log factor(t)
  std::function<double(double)> log_slope;

  double value(std::span<const double> x) const;
  /// grad V(x) with V = -log a.
  void grad_potential(std::span<const double> x, std::span<double> out) const;
};

/// -div(a grad u) = f on a domain, with Dirichlet data r on the unit sphere
/// or periodic conditions on the torus (r unused there).
struct PdeProblem
{
  std::string name;
  Domain domain;
  Coefficient coefficient;
  ScalarField source;
  /// f / a; when empty it is computed as source(x) / coefficient.value(x).
  ScalarField source_over_coefficient;
  ScalarField boundary;
  /// Closed-form solution, when known.
  ScalarField exact;

  int dim() const { return domain.dim; }
  double f_over_a(std::span<const double> x) const;
  double boundary_value(std::span<const double> x) const;
  /// Sampling density proportional to a.
  DensitySpec rho_spec(int table_size = 4096) const;
};

/// Ball problem: a = exp(-2|x|^2), f = -4d, r = e^2, u* = exp(2|x|^2).
PdeProblem ball_problem(int dim);
/// Torus problem: a = exp(-sum cos 2 pi x_i), u* = sum sin 2 pi x_i.
PdeProblem torus_problem(int dim);

/// Throws std::invalid_argument unless a(x) >= a_min > 0 at `samples`
/// points drawn from the domain and the problem's fields are set.
void validate(const PdeProblem& problem, int samples = 1000, std::uint64_t seed = 0);

/// Ground state of -Laplacian + V on the torus with
/// V(x) = 4 pi^2 sum_i c_i cos(2 pi x_i).
struct EigenProblem
{
  std::vector<double> coefficients;

  int dim() const { return static_cast<int>(coefficients.size()); }
  double potential(std::span<const double> x) const;
};

/// Seeded uniform draws of c_i in [0, 0.2].
std::vector<double> draw_potential_coefficients(int dim, std::uint64_t seed);

} // namespace semigroup
