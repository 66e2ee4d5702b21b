#pragma once

#include "semigroup/adam.hpp"
#include "semigroup/mlp.hpp"
#include "semigroup/problems.hpp"
#include "semigroup/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace semigroup {

/// One Euler-Maruyama step of dX = -grad V dt + sqrt(2) dW from `start`.
struct TrajectorySample
{
  std::vector<double> start;
  /// Endpoint, wrapped into [0, 1)^d on the torus.
  std::vector<double> end;
  bool interior = true;
  /// Crossing point with the unit sphere when !interior.
  std::vector<double> exit_point;
  /// Fraction of the step spent before the crossing (1 when interior).
  double exit_fraction = 1.0;
  /// Left-point quadrature of the integral of f/a up to min(tau, dt).
  double work = 0.0;
};

/// Steps with a caller-supplied Brownian increment `noise` ~ W_dt.
/// Throws NumericError if grad V is not finite at the start.
TrajectorySample simulate_step(const PdeProblem& problem, std::span<const double> start,
                               double dt, std::span<const double> noise);
TrajectorySample simulate_step(const PdeProblem& problem, std::span<const double> start,
                               double dt, RngStream& stream);

/// Structure-of-arrays batch of trajectory samples; column k is sample k.
struct TrajectoryBatch
{
  Eigen::MatrixXd start;
  Eigen::MatrixXd end;
  Eigen::MatrixXd exit_point;
  std::vector<std::uint8_t> interior;
  std::vector<double> exit_fraction;
  std::vector<double> work;

  Eigen::Index size() const { return start.cols(); }
  void resize(int dim, Eigen::Index n);
  TrajectorySample sample(Eigen::Index k) const;
  void set(Eigen::Index k, const TrajectorySample& s);
};

/// Simulates one step from every column of `starts`. Sample k draws its
/// increment from stream (seed, stream_id(Purpose::pde_step, iteration, k));
/// noise_sign = -1 gives the mirrored path of the same draw.
TrajectoryBatch simulate_batch(const PdeProblem& problem,
                               const Eigen::Ref<const Eigen::MatrixXd>& starts, double dt,
                               std::uint64_t seed, std::uint64_t iteration,
                               double noise_sign = 1.0);

/// u(X) - u(X_dt) 1{interior} - r(X_tau) 1{exit} - work.
double residual_bracket(const PdeProblem& problem, const TrajectoryBatch& batch, Eigen::Index k,
                        double u_start, double u_end);

struct GradientEstimate
{
  Eigen::VectorXd gradient;
  /// Batch mean of the residual bracket (or of u - r for the penalty).
  double bracket_mean = 0.0;
};

/// Batch mean of grad u(X) * bracket, the gradient of the semigroup
/// variational energy. With `mirror` (same starts, negated increments) the
/// bracket is the average over both paths. Throws std::invalid_argument for
/// an empty or mismatched batch.
GradientEstimate pde_grad_estimate(const PdeProblem& problem, const MlpModel& model,
                                   const TrajectoryBatch& batch,
                                   const TrajectoryBatch* mirror = nullptr);

/// Batch mean of 2 c grad u(X) (u(X) - r(X)) over boundary points.
/// Throws std::invalid_argument on the torus or for c < 0.
GradientEstimate penalty_grad_estimate(const PdeProblem& problem, const MlpModel& model,
                                       const Eigen::Ref<const Eigen::MatrixXd>& boundary_points,
                                       double penalty);

/// u evaluated at every column, chunked and parallel.
Eigen::VectorXd evaluate_batch(const MlpModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& points);

/// Piecewise-constant rate: `initial` before switch_fraction * T, `late` after.
struct LearningRateSchedule
{
  double initial = 1e-3;
  double late = 0.0; // 0 means "same as initial"
  double switch_fraction = 0.5;

  double at(std::int64_t iteration, std::int64_t total) const;
};

struct PdeTrainOptions
{
  int width = 120;
  int trig_level = 0;
  /// Scale on the initial weight bounds.
  double init_gain = 1.0;
  double dt = 1e-4;
  std::int64_t batch_size = 70000;
  /// Boundary batch (Dirichlet) and mean-removal batch (torus).
  std::int64_t aux_batch_size = 10000;
  /// Fixed training set size; 0 draws fresh rho samples every iteration.
  std::int64_t training_samples = 0;
  std::int64_t iterations = 1000;
  LearningRateSchedule learning_rate;
  double penalty = 0.0;
  bool use_penalty = true;
  /// Pair every increment with its negation (same expectation, less noise).
  bool antithetic = false;
  std::int64_t eval_every = 50;
  std::int64_t test_samples = 10000;
  std::int64_t checkpoint_every = 0;
  int table_size = 4096;
  std::uint64_t seed = 0;
};

struct PdeMetricsRecord
{
  std::int64_t iteration = 0;
  double epoch = 0.0;
  double e0 = 0.0;
  double bracket_mean = 0.0;
  double grad_norm = 0.0;
  double seconds = 0.0;
};

struct PdeTrainResult
{
  MlpModel model;
  std::vector<PdeMetricsRecord> metrics;
  /// Mean removed from the model after training (torus only).
  double removed_mean = 0.0;
};

struct PdeCallbacks
{
  std::function<void(const PdeMetricsRecord&)> on_record;
  std::function<void(std::int64_t, const MlpModel&)> on_checkpoint;
};

/// Iterations per pass over a training set of n samples in batches of b.
std::int64_t iterations_per_epoch(std::int64_t n, std::int64_t b);

/// Stochastic semigroup training loop. Throws NumericError when the
/// gradient stops being finite.
PdeTrainResult train_pde(const PdeProblem& problem, const PdeTrainOptions& options,
                         const PdeCallbacks& callbacks = {});

/// Relative L2_rho error of `model` against problem.exact on `test_samples`
/// rho-distributed points drawn from the seed's test stream.
double pde_test_error(const PdeProblem& problem, const MlpModel& model,
                      std::int64_t test_samples, std::uint64_t seed, int table_size = 4096);

/// rho-distributed points, column k from stream (seed, stream_id(purpose, iteration, k)).
Eigen::MatrixXd sample_points(const DensitySampler& sampler, std::int64_t n, std::uint64_t seed,
                              Purpose purpose, std::uint64_t iteration = 0);

} // namespace semigroup
