#pragma once

#include "semigroup/geometry.hpp"
#include "semigroup/random.hpp"

#include <functional>
#include <span>
#include <vector>

namespace semigroup {

enum class DensityKind
{
  uniform_domain,
  /// a(x) = prod_i factor(x_i) on the torus
  gibbs_product,
  /// a(x) = factor(|x|) on the unit ball
  gibbs_radial,
  /// uniform measure on the unit sphere
  boundary_uniform,
};

struct DensitySpec
{
  DensityKind kind = DensityKind::uniform_domain;
  /// 1-D factor (product case) or radial profile (radial case). Must be positive.
  std::function<double(double)> factor;
  int table_size = 4096;
};

/// Tabulated inverse CDF of a positive 1-D density on [lo, hi]. Cell
/// masses come from 5-point Gauss-Legendre; inversion interpolates
/// linearly between nodes.
class InverseCdfTable
{
public:
  InverseCdfTable() = default;
  InverseCdfTable(const std::function<double(double)>& density, double lo, double hi, int cells);

  double sample(double u) const;
  std::span<const double> cdf() const { return cdf_; }
  std::span<const double> nodes() const { return nodes_; }
  /// Integral of the unnormalized density over [lo, hi].
  double mass() const { return mass_; }

private:
  std::vector<double> nodes_;
  std::vector<double> cdf_;
  double mass_ = 0.0;
};

/// Draws points from a density on a domain. Tables are built once at
/// construction; sampling is const and thread-safe.
class DensitySampler
{
public:
  DensitySampler(Domain domain, DensitySpec spec);

  const Domain& domain() const { return domain_; }
  const DensitySpec& spec() const { return spec_; }
  const InverseCdfTable& table() const { return table_; }

  void sample(RngStream& stream, std::span<double> out) const;

private:
  Domain domain_;
  DensitySpec spec_;
  InverseCdfTable table_;
};

/// Uniform point on the unit sphere in dimension out.size().
void sample_boundary_mu(RngStream& stream, std::span<double> out);

/// Uniform point on [0, 1)^d.
void sample_uniform_torus(RngStream& stream, std::span<double> out);

} // namespace semigroup
