#include "semigroup/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace semigroup {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
} // namespace

double Coefficient::value(std::span<const double> x) const
{
  if (shape == CoefficientShape::product) {
    double a = 1.0;
    for (double xi : x)
      a *= factor(xi);
    return a;
  }
  double r2 = 0.0;
  for (double xi : x)
    r2 += xi * xi;
  return factor(std::sqrt(r2));
}

void Coefficient::grad_potential(std::span<const double> x, std::span<double> out) const
{
  if (shape == CoefficientShape::product) {
    for (std::size_t i = 0; i < x.size(); ++i)
      out[i] = -log_slope(x[i]);
    return;
  }
  double r2 = 0.0;
  for (double xi : x)
    r2 += xi * xi;
  const double r = std::sqrt(r2);
  // smooth radial profiles have zero slope at the origin
  const double scale = r > 0.0 ? -log_slope(r) / r : 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = scale * x[i];
}

double PdeProblem::f_over_a(std::span<const double> x) const
{
  if (source_over_coefficient)
    return source_over_coefficient(x);
  return source(x) / coefficient.value(x);
}

double PdeProblem::boundary_value(std::span<const double> x) const
{
  return boundary ? boundary(x) : 0.0;
}

DensitySpec PdeProblem::rho_spec(int table_size) const
{
  DensitySpec spec;
  spec.kind = coefficient.shape == CoefficientShape::product ? DensityKind::gibbs_product
                                                             : DensityKind::gibbs_radial;
  spec.factor = coefficient.factor;
  spec.table_size = table_size;
  return spec;
}

PdeProblem ball_problem(int dim)
{
  if (dim < 1)
    throw std::invalid_argument("ball_problem: dimension must be at least 1");
  PdeProblem p;
  p.name = "ball";
  p.domain = {DomainKind::unit_ball, dim};
  p.coefficient.shape = CoefficientShape::radial;
  p.coefficient.factor = [](double r) { return std::exp(-2.0 * r * r); };
  p.coefficient.log_slope = [](double r) { return -4.0 * r; };
  const double f = -4.0 * dim;
  p.source = [f](std::span<const double>) { return f; };
  p.source_over_coefficient = [f](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x)
      r2 += v * v;
    return f * std::exp(2.0 * r2);
  };
  p.boundary = [](std::span<const double>) { return std::exp(2.0); };
  p.exact = [](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x)
      r2 += v * v;
    return std::exp(2.0 * r2);
  };
  return p;
}

PdeProblem torus_problem(int dim)
{
  if (dim < 1)
    throw std::invalid_argument("torus_problem: dimension must be at least 1");
  PdeProblem p;
  p.name = "torus";
  p.domain = {DomainKind::torus, dim};
  p.coefficient.shape = CoefficientShape::product;
  p.coefficient.factor = [](double t) { return std::exp(-std::cos(kTwoPi * t)); };
  p.coefficient.log_slope = [](double t) { return kTwoPi * std::sin(kTwoPi * t); };
  p.source_over_coefficient = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
      const double sn = std::sin(kTwoPi * v), cs = std::cos(kTwoPi * v);
      s += 2.0 * sn - 2.0 * sn * cs; // 2 sin(2 pi x) - sin(4 pi x)
    }
    return 2.0 * kPi * kPi * s;
  };
  const auto coeff = p.coefficient;
  const auto fa = p.source_over_coefficient;
  p.source = [coeff, fa](std::span<const double> x) { return coeff.value(x) * fa(x); };
  p.boundary = [](std::span<const double>) { return 0.0; };
  p.exact = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x)
      s += std::sin(kTwoPi * v);
    return s;
  };
  return p;
}

void validate(const PdeProblem& problem, int samples, std::uint64_t seed)
{
  if (problem.dim() < 1)
    throw std::invalid_argument("PdeProblem: dimension must be at least 1");
  if (!problem.coefficient.factor || !problem.coefficient.log_slope)
    throw std::invalid_argument("PdeProblem: coefficient and its log-derivative are required");
  if (!problem.source && !problem.source_over_coefficient)
    throw std::invalid_argument("PdeProblem: source term is required");
  if (!problem.domain.is_torus() && !problem.boundary)
    throw std::invalid_argument("PdeProblem: Dirichlet data is required on the ball");
  if ((problem.coefficient.shape == CoefficientShape::product) != problem.domain.is_torus())
    throw std::invalid_argument(
      "PdeProblem: product coefficients live on the torus, radial ones on the ball");

  const DensitySampler uniform(problem.domain, DensitySpec{});
  std::vector<double> x(problem.dim());
  double a_min = INFINITY;
  for (int k = 0; k < samples; ++k) {
    RngStream rng(seed, stream_id(Purpose::user, 0, static_cast<std::uint64_t>(k)));
    uniform.sample(rng, x);
    a_min = std::min(a_min, problem.coefficient.value(x));
  }
  if (!(a_min > 0.0) || !std::isfinite(a_min))
    throw std::invalid_argument("PdeProblem: coefficient is not bounded away from zero");
}

double EigenProblem::potential(std::span<const double> x) const
{
  double v = 0.0;
  for (std::size_t i = 0; i < coefficients.size(); ++i)
    v += coefficients[i] * std::cos(kTwoPi * x[i]);
  return 4.0 * kPi * kPi * v;
}

std::vector<double> draw_potential_coefficients(int dim, std::uint64_t seed)
{
  RngStream rng(seed, stream_id(Purpose::coefficients, 0, 0));
  std::vector<double> c(dim);
  for (double& v : c)
    v = 0.2 * rng.uniform();
  return c;
}

} // namespace semigroup
