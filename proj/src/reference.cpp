#include "semigroup/reference.hpp"

#include "semigroup/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace semigroup {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
} // namespace

double analytic_pde_solution(std::string_view problem_id, std::span<const double> x)
{
  if (problem_id == "ball") {
    double r2 = 0.0;
    for (double v : x)
      r2 += v * v;
    return std::exp(2.0 * r2);
  }
  if (problem_id == "torus") {
    double s = 0.0;
    for (double v : x)
      s += std::sin(kTwoPi * v);
    return s;
  }
  throw std::invalid_argument("analytic_pde_solution: unknown problem '" +
                              std::string(problem_id) + "'");
}

double SpectralSolution1D::operator()(double x) const
{
  const double t = x - std::floor(x);
  const double cs = std::cos(kTwoPi * t), sn = std::sin(kTwoPi * t);
  // cos/sin of 2 pi k t by rotation
  double ck = 1.0, sk = 0.0;
  double value = basis_coefficients[0];
  for (int k = 1; k <= modes; ++k) {
    const double next_c = ck * cs - sk * sn;
    sk = sk * cs + ck * sn;
    ck = next_c;
    value += std::numbers::sqrt2 * (basis_coefficients[k] * ck + basis_coefficients[modes + k] * sk);
  }
  return value;
}

SpectralSolution1D spectral_ground_state_1d(double coefficient, int modes)
{
  if (modes < 8)
    throw std::invalid_argument("spectral_ground_state_1d: need at least 8 modes");
  SpectralSolution1D sol;
  sol.coefficient = coefficient;
  sol.modes = modes;
  const int n = 2 * modes + 1;
  sol.basis_coefficients = Eigen::VectorXd::Zero(n);
  if (coefficient == 0.0) {
    // free Laplacian: constant ground state, eigenvalue 0
    sol.basis_coefficients[0] = 1.0;
    return sol;
  }

  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n, n);
  const double v = 4.0 * kPi * kPi * coefficient;
  for (int k = 1; k <= modes; ++k) {
    const double kinetic = (kTwoPi * k) * (kTwoPi * k);
    op(k, k) = kinetic;
    op(modes + k, modes + k) = kinetic;
  }
  // cos(2 pi x) couples neighbouring modes
  op(0, 1) = op(1, 0) = v / std::numbers::sqrt2;
  for (int k = 1; k < modes; ++k) {
    op(k, k + 1) = op(k + 1, k) = 0.5 * v;
    op(modes + k, modes + k + 1) = op(modes + k + 1, modes + k) = 0.5 * v;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op);
  if (solver.info() != Eigen::Success)
    throw NumericError("spectral_ground_state_1d: eigensolver failed");
  Eigen::VectorXd vec = solver.eigenvectors().col(0);
  if (vec[0] < 0.0)
    vec = -vec;
  vec /= vec.norm();
  sol.basis_coefficients = vec;
  // The Rayleigh quotient is accurate relative to |lambda| rather than to
  // the largest diagonal entry.
  sol.eigenvalue = vec.dot(op * vec);
  return sol;
}

TensorGroundState::TensorGroundState(std::span<const double> coefficients, int modes)
{
  if (coefficients.empty())
    throw std::invalid_argument("tensor_ground_state: dimension must be at least 1");
  factors_.reserve(coefficients.size());
  for (double c : coefficients) {
    factors_.push_back(spectral_ground_state_1d(c, modes));
    eigenvalue_ += factors_.back().eigenvalue;
  }
}

double TensorGroundState::operator()(std::span<const double> x) const
{
  if (x.size() != factors_.size())
    throw std::invalid_argument("TensorGroundState: dimension mismatch");
  double u = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    u *= factors_[i](x[i]);
  return u;
}

double error_E0(std::span<const double> approx, std::span<const double> exact, bool align_sign)
{
  if (approx.empty() || approx.size() != exact.size())
    throw std::invalid_argument("error_E0: need equally many nonempty values");
  double inner = 0.0, ref2 = 0.0;
  for (std::size_t k = 0; k < approx.size(); ++k) {
    inner += approx[k] * exact[k];
    ref2 += exact[k] * exact[k];
  }
  if (!(ref2 > 0.0))
    throw std::invalid_argument("error_E0: reference has zero norm");
  const double sign = (align_sign && inner < 0.0) ? -1.0 : 1.0;
  double diff2 = 0.0;
  for (std::size_t k = 0; k < approx.size(); ++k) {
    const double e = approx[k] - sign * exact[k];
    diff2 += e * e;
  }
  return std::sqrt(diff2 / ref2);
}

EigenvalueError error_E1(double lambda, double lambda_ref)
{
  if (lambda_ref == 0.0)
    return {std::abs(lambda), false};
  return {std::abs(lambda - lambda_ref) / std::abs(lambda_ref), true};
}

double silverman_bandwidth(std::span<const double> samples)
{
  const double n = static_cast<double>(samples.size());
  if (samples.size() < 2)
    throw std::invalid_argument("silverman_bandwidth: need at least two samples");
  double mean = 0.0;
  for (double s : samples)
    mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : samples)
    var += (s - mean) * (s - mean);
  var /= (n - 1.0);
  if (!(var > 0.0))
    throw std::invalid_argument("kde: samples have zero variance");
  return 1.06 * std::sqrt(var) * std::pow(n, -0.2);
}

KdeCurve kde_density(std::span<const double> samples, std::span<const double> grid)
{
  KdeCurve curve;
  curve.bandwidth = silverman_bandwidth(samples);
  curve.grid.assign(grid.begin(), grid.end());
  curve.density.assign(grid.size(), 0.0);
  const double h = curve.bandwidth;
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * kPi));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double acc = 0.0;
    for (double s : samples) {
      const double z = (grid[j] - s) / h;
      acc += std::exp(-0.5 * z * z);
    }
    curve.density[j] = acc * norm;
  }
  return curve;
}

std::vector<double> kde_grid(std::span<const double> samples, int points, double pad)
{
  if (samples.empty() || points < 2)
    throw std::invalid_argument("kde_grid: need samples and at least two points");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double h = silverman_bandwidth(samples);
  const double lo = *lo_it - pad * h, hi = *hi_it + pad * h;
  std::vector<double> grid(points);
  for (int j = 0; j < points; ++j)
    grid[j] = lo + (hi - lo) * j / (points - 1);
  return grid;
}

} // namespace semigroup
