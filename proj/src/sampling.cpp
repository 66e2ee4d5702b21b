#include "semigroup/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace semigroup {

namespace {

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGlNodes = {
  -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGlWeights = {
  0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
  0.2369268850561891};

} // namespace

InverseCdfTable::InverseCdfTable(const std::function<double(double)>& density, double lo,
                                 double hi, int cells)
{
  if (cells < 2 || !(hi > lo))
    throw std::invalid_argument("InverseCdfTable: need at least two cells on a nonempty interval");
  nodes_.resize(cells + 1);
  cdf_.resize(cells + 1);
  const double h = (hi - lo) / cells;
  double acc = 0.0;
  nodes_[0] = lo;
  cdf_[0] = 0.0;
  for (int j = 0; j < cells; ++j) {
    const double mid = lo + (j + 0.5) * h;
    double cell = 0.0;
    for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
      const double v = density(mid + 0.5 * h * kGlNodes[q]);
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("InverseCdfTable: density must be finite and nonnegative");
      cell += kGlWeights[q] * v;
    }
    acc += 0.5 * h * cell;
    nodes_[j + 1] = lo + (j + 1) * h;
    cdf_[j + 1] = acc;
  }
  if (!(acc > 0.0))
    throw std::invalid_argument("InverseCdfTable: density has zero mass");
  mass_ = acc;
  for (double& c : cdf_)
    c /= acc;
  cdf_.back() = 1.0;
  nodes_.back() = hi;
}

double InverseCdfTable::sample(double u) const
{
  // First node whose cdf exceeds u; the cell [j-1, j] brackets u.
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end())
    return nodes_.back();
  const auto j = static_cast<std::size_t>(it - cdf_.begin());
  if (j == 0)
    return nodes_.front();
  const double c0 = cdf_[j - 1], c1 = cdf_[j];
  const double w = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
  return nodes_[j - 1] + w * (nodes_[j] - nodes_[j - 1]);
}

DensitySampler::DensitySampler(Domain domain, DensitySpec spec)
    : domain_(domain), spec_(std::move(spec))
{
  if (domain_.dim < 1)
    throw std::invalid_argument("DensitySampler: dimension must be at least 1");
  switch (spec_.kind) {
  case DensityKind::uniform_domain:
    break;
  case DensityKind::gibbs_product:
    if (!domain_.is_torus())
      throw std::invalid_argument("DensitySampler: product density requires the torus");
    if (!spec_.factor)
      throw std::invalid_argument("DensitySampler: product density needs a factor");
    table_ = InverseCdfTable(spec_.factor, 0.0, 1.0, spec_.table_size);
    break;
  case DensityKind::gibbs_radial: {
    if (domain_.is_torus())
      throw std::invalid_argument("DensitySampler: radial density requires the unit ball");
    if (!spec_.factor)
      throw std::invalid_argument("DensitySampler: radial density needs a profile");
    const int d = domain_.dim;
    auto profile = spec_.factor;
    table_ = InverseCdfTable(
      [profile, d](double r) { return std::pow(r, d - 1) * profile(r); }, 0.0, 1.0,
      spec_.table_size);
    break;
  }
  case DensityKind::boundary_uniform:
    if (domain_.is_torus())
      throw std::invalid_argument("DensitySampler: boundary density requires the unit ball");
    break;
  }
}

void DensitySampler::sample(RngStream& stream, std::span<double> out) const
{
  if (static_cast<int>(out.size()) != domain_.dim)
    throw std::invalid_argument("DensitySampler::sample: dimension mismatch");
  switch (spec_.kind) {
  case DensityKind::uniform_domain:
    if (domain_.is_torus()) {
      sample_uniform_torus(stream, out);
    } else {
      sample_boundary_mu(stream, out);
      const double r = std::pow(stream.uniform(), 1.0 / domain_.dim);
      for (double& v : out)
        v *= r;
    }
    return;
  case DensityKind::gibbs_product:
    for (double& v : out) {
      v = table_.sample(stream.uniform());
      if (v >= 1.0)
        v = 0.0;
    }
    return;
  case DensityKind::gibbs_radial: {
    sample_boundary_mu(stream, out);
    double r = table_.sample(stream.uniform());
    // keep strictly inside the open ball
    r = std::min(r, std::nextafter(1.0, 0.0));
    for (double& v : out)
      v *= r;
    return;
  }
  case DensityKind::boundary_uniform:
    sample_boundary_mu(stream, out);
    return;
  }
}

void sample_boundary_mu(RngStream& stream, std::span<double> out)
{
  if (out.empty())
    throw std::invalid_argument("sample_boundary_mu: dimension must be at least 1");
  for (;;) {
    double s = 0.0;
    for (double& v : out) {
      v = stream.normal();
      s += v * v;
    }
    if (s > 0.0) {
      const double inv = 1.0 / std::sqrt(s);
      for (double& v : out)
        v *= inv;
      return;
    }
  }
}

void sample_uniform_torus(RngStream& stream, std::span<double> out)
{
  for (double& v : out)
    v = stream.uniform();
}

} // namespace semigroup
