#pragma once

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <vector>

namespace semigroup {

/// Closed-form solution of a preset PDE ("ball" or "torus").
/// Throws std::invalid_argument for an unknown id.
double analytic_pde_solution(std::string_view problem_id, std::span<const double> x);

/// Ground state of -u'' + 4 pi^2 c cos(2 pi x) u on [0, 1) in the real
/// Fourier basis {1, sqrt2 cos 2 pi k x, sqrt2 sin 2 pi k x : k <= M}.
struct SpectralSolution1D
{
  double coefficient = 0.0;
  int modes = 0;
  double eigenvalue = 0.0;
  /// Basis coefficients ordered [1, cos_1..cos_M, sin_1..sin_M]; unit norm,
  /// so the function has unit L2 norm. The constant coefficient is positive.
  Eigen::VectorXd basis_coefficients;

  double operator()(double x) const;
};

/// Throws std::invalid_argument for M < 8 and NumericError if the
/// eigensolver fails.
SpectralSolution1D spectral_ground_state_1d(double coefficient, int modes = 32);

/// Separable ground state of -Laplacian + 4 pi^2 sum c_i cos(2 pi x_i):
/// eigenvalue sum_i lambda_i, eigenfunction prod_i u_i(x_i).
class TensorGroundState
{
public:
  TensorGroundState() = default;
  TensorGroundState(std::span<const double> coefficients, int modes = 32);

  double eigenvalue() const { return eigenvalue_; }
  int dim() const { return static_cast<int>(factors_.size()); }
  const std::vector<SpectralSolution1D>& factors() const { return factors_; }
  double operator()(std::span<const double> x) const;

private:
  std::vector<SpectralSolution1D> factors_;
  double eigenvalue_ = 0.0;
};

inline TensorGroundState tensor_ground_state(std::span<const double> coefficients,
                                             int modes = 32)
{
  return TensorGroundState(coefficients, modes);
}

/// Monte-Carlo relative L2 error ||approx - exact|| / ||exact|| over paired
/// samples. With `align_sign` the exact values are first multiplied by
/// sign(<approx, exact>), which makes the error blind to eigenfunction sign.
/// Throws std::invalid_argument on empty or mismatched input, or a zero
/// reference norm.
double error_E0(std::span<const double> approx, std::span<const double> exact,
                bool align_sign = false);

struct EigenvalueError
{
  double value = 0.0;
  /// False when the reference eigenvalue is 0 and the absolute error is returned.
  bool relative = true;
};

EigenvalueError error_E1(double lambda, double lambda_ref);

/// 1.06 * sigma * n^(-1/5).
double silverman_bandwidth(std::span<const double> samples);

struct KdeCurve
{
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// Gaussian kernel density estimate with Silverman's bandwidth.
/// Throws std::invalid_argument for fewer than two samples or zero variance.
KdeCurve kde_density(std::span<const double> samples, std::span<const double> grid);

/// Evenly spaced grid covering the samples with `pad` bandwidths on each side.
std::vector<double> kde_grid(std::span<const double> samples, int points, double pad = 5.0);

} // namespace semigroup
