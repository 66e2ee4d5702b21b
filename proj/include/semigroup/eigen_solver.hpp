#pragma once

#include "semigroup/adam.hpp"
#include "semigroup/mlp.hpp"
#include "semigroup/pde_solver.hpp"
#include "semigroup/problems.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace semigroup {

enum class EigenScheme
{
  /// first-order semigroup energy, one forward/backward pass per sample
  scheme1 = 1,
  /// symmetric squared-difference energy, two passes per sample
  scheme2 = 2,
};

/// Scheme I factor multiplying grad u(x):
///   (u - u_next) / dt + v u / 2 + c g u.
double scheme1_bracket(double u, double u_next, double v, double g, double c_scale, double dt);

/// Scheme II factors multiplying grad u(x) and grad u(x+w).
struct Scheme2Seeds
{
  double at_x = 0.0;
  double at_next = 0.0;
};
Scheme2Seeds scheme2_seeds(double u, double u_next, double v, double g, double c_scale, double dt);

/// Per-sample parameter gradient for Scheme I:
///   grad u(x) [ (u(x) - u(x+w)) / dt + V(x) u(x) / 2 + c g u(x) ].
/// x + w is wrapped to the torus before evaluation.
Eigen::VectorXd scheme1_grad_sample(const MlpModel& model, const EigenProblem& problem,
                                    std::span<const double> x, std::span<const double> w,
                                    double g, double c_scale, double dt);

/// Per-sample parameter gradient for Scheme II:
///   (grad u(x) - grad u(x+w)) (u(x) - u(x+w)) / dt + grad u(x) (V(x) + c g) u(x).
Eigen::VectorXd scheme2_grad_sample(const MlpModel& model, const EigenProblem& problem,
                                    std::span<const double> x, std::span<const double> w,
                                    double g, double c_scale, double dt);

/// Multiplier state of the primal-dual loop.
struct DualState
{
  double g = 0.0;
  double eps_prev = 0.0;
  bool has_prev = false;
  double g_default = 1.0;
  double c_scale = 1.0;
  double dual_lr = 0.1;
};

/// min(mean_sq - 1, 1), or max(mean_sq - 1, 1) with `literal_max`.
double dual_epsilon(double mean_square, bool literal_max = false);

/// Batch estimate of ||u||^2 - 1 over the columns of `points`, clipped as
/// in dual_epsilon. Throws std::invalid_argument for an empty batch.
double dual_epsilon(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points,
                    bool literal_max = false);

/// Resets g to sign(eps) g_default on the first call or when eps changes
/// sign, otherwise moves g by dual_lr * c * eps / 2.
void dual_update(DualState& state, double eps);

/// A batch of uniform points x and paired increments w ~ W_dt.
struct EigenBatch
{
  Eigen::MatrixXd x;
  Eigen::MatrixXd w;
};

/// Column k uses stream (seed, stream_id(purpose, iteration, k)).
EigenBatch draw_eigen_batch(int dim, std::int64_t n, double dt, std::uint64_t seed,
                            Purpose purpose, std::uint64_t iteration);

struct EigenGradient
{
  Eigen::VectorXd gradient;
  /// Batch mean of u(x)^2.
  double mean_square = 0.0;
};

/// Batch mean of the scheme's per-sample gradient.
EigenGradient eigen_grad_estimate(EigenScheme scheme, const EigenProblem& problem,
                                  const MlpModel& model, const EigenBatch& batch, double g,
                                  double c_scale, double dt);

enum class LambdaNorm
{
  unit,
  rayleigh,
};

struct LambdaOptions
{
  /// Average each readout over the increment pair (w, -w).
  bool antithetic = true;
  LambdaNorm norm = LambdaNorm::unit;
  /// Denominator used in unit mode.
  double norm_value = 1.0;
};

struct LambdaEstimate
{
  double value = 0.0;
  double standard_error = 0.0;
};

/// Scheme I:  mean of (2/dt) u (u - u(x+w)) + V u^2.
/// Scheme II: mean of |u - u(x+w)|^2 / dt + V u^2.
/// Divided by options.norm_value, or by the batch mean of u^2 in Rayleigh
/// mode. Throws std::invalid_argument for a nonpositive norm.
LambdaEstimate lambda_estimate(EigenScheme scheme, const EigenProblem& problem,
                               const MlpModel& model, const EigenBatch& batch, double dt,
                               const LambdaOptions& options = {});
/// The same readout for an arbitrary function on the torus.
LambdaEstimate lambda_estimate(EigenScheme scheme, const EigenProblem& problem,
                               const std::function<double(std::span<const double>)>& field,
                               const EigenBatch& batch, double dt,
                               const LambdaOptions& options = {});

struct EigenTrainOptions
{
  EigenScheme scheme = EigenScheme::scheme2;
  int width = 300;
  int trig_level = 5;
  double init_gain = 1.0;
  double dt = 1e-3;
  double c_scale = 10.0;
  double g_default = 4.0;
  std::int64_t batch_size = 10000;
  /// Dual batch size.
  std::int64_t aux_batch_size = 10000;
  std::int64_t iterations = 2000;
  LearningRateSchedule learning_rate{8e-4, 3e-4, 0.5};
  double dual_lr = 0.1;
  bool literal_max_clip = false;
  LambdaOptions lambda;
  std::int64_t eval_every = 10;
  std::int64_t test_samples = 10000;
  /// Readout points per evaluation during training.
  std::int64_t lambda_samples = 10000;
  /// Final readout: mean of `final_lambda_repeats` estimates on
  /// `final_lambda_samples` points each.
  int final_lambda_repeats = 10;
  std::int64_t final_lambda_samples = 100000;
  int spectral_modes = 32;
  std::int64_t checkpoint_every = 0;
  std::uint64_t seed = 0;
};

struct EigenMetricsRecord
{
  std::int64_t iteration = 0;
  double e0 = 0.0;
  double e1 = 0.0;
  double lambda = 0.0;
  /// ||u||^2 - 1 on the test points.
  double norm_residual = 0.0;
  double g = 0.0;
  double seconds = 0.0;
};

struct EigenTrainResult
{
  MlpModel model;
  DualState dual;
  std::vector<EigenMetricsRecord> metrics;
  double lambda = 0.0;
  double lambda_standard_error = 0.0;
  double lambda_reference = 0.0;
  double e0 = 0.0;
  double e1 = 0.0;
  double norm_residual = 0.0;
};

struct EigenCallbacks
{
  std::function<void(const EigenMetricsRecord&)> on_record;
  std::function<void(std::int64_t, const MlpModel&, const DualState&)> on_checkpoint;
};

/// Primal-dual training loop: scheme gradient with the current g, dual
/// update from a fresh batch, then the Adam step. Throws NumericError when
/// the gradient stops being finite.
EigenTrainResult train_eigen(const EigenProblem& problem, const EigenTrainOptions& options,
                             const EigenCallbacks& callbacks = {});

/// Relative L2 error against the separable reference, blind to sign, on
/// `n` uniform points from the seed's test stream.
double eigen_test_error(const EigenProblem& problem, const MlpModel& model, std::int64_t n,
                        std::uint64_t seed, int modes = 32);

/// Mean of `repeats` readouts on independent batches of `n` points; the
/// standard error is that of the mean.
LambdaEstimate final_lambda(EigenScheme scheme, const EigenProblem& problem,
                            const MlpModel& model, double dt, int repeats, std::int64_t n,
                            std::uint64_t seed, const LambdaOptions& options = {});

/// Plain-text sidecar holding the multiplier state next to a checkpoint.
std::string encode_dual_state(const DualState& state);
DualState decode_dual_state(const std::string& text);

} // namespace semigroup
