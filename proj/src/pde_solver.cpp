#include "semigroup/pde_solver.hpp"

#include "batch_reduce.hpp"
#include "semigroup/geometry.hpp"
#include "semigroup/io.hpp"
#include "semigroup/parallel.hpp"
#include "semigroup/reference.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace semigroup {

namespace {

// Shared body of the single-sample and batched steppers. Writes the
// endpoint and exit point, returns (interior, fraction, work).
struct StepResult
{
  bool interior;
  double fraction;
  double work;
};

StepResult step_into(const PdeProblem& problem, std::span<const double> start, double dt,
                     std::span<const double> noise, std::span<double> end,
                     std::span<double> exit_point, std::span<double> drift)
{
  problem.coefficient.grad_potential(start, drift);
  const double noise_scale = std::numbers::sqrt2;
  for (std::size_t i = 0; i < start.size(); ++i) {
    if (!std::isfinite(drift[i]))
      throw NumericError("simulate_step: grad V is not finite at the start point");
    end[i] = start[i] - drift[i] * dt + noise_scale * noise[i];
  }
  const double fa = problem.f_over_a(start);
  if (problem.domain.is_torus()) {
    wrap_periodic(end);
    std::copy(end.begin(), end.end(), exit_point.begin());
    return {true, 1.0, fa * dt};
  }
  const StepExit ex = classify_step(start, end, exit_point);
  if (!ex.exited) {
    std::copy(end.begin(), end.end(), exit_point.begin());
    return {true, 1.0, fa * dt};
  }
  return {false, ex.fraction, fa * ex.fraction * dt};
}

} // namespace

TrajectorySample simulate_step(const PdeProblem& problem, std::span<const double> start,
                               double dt, std::span<const double> noise)
{
  if (!(dt > 0.0))
    throw std::invalid_argument("simulate_step: time step must be positive");
  const std::size_t d = problem.dim();
  if (start.size() != d || noise.size() != d)
    throw std::invalid_argument("simulate_step: dimension mismatch");
  TrajectorySample s;
  s.start.assign(start.begin(), start.end());
  s.end.resize(d);
  s.exit_point.resize(d);
  std::vector<double> drift(d);
  const StepResult r = step_into(problem, start, dt, noise, s.end, s.exit_point, drift);
  s.interior = r.interior;
  s.exit_fraction = r.fraction;
  s.work = r.work;
  return s;
}

TrajectorySample simulate_step(const PdeProblem& problem, std::span<const double> start,
                               double dt, RngStream& stream)
{
  std::vector<double> noise(problem.dim());
  brownian_increment(stream, dt, noise);
  return simulate_step(problem, start, dt, noise);
}

void TrajectoryBatch::resize(int dim, Eigen::Index n)
{
  start.resize(dim, n);
  end.resize(dim, n);
  exit_point.resize(dim, n);
  interior.assign(n, 1);
  exit_fraction.assign(n, 1.0);
  work.assign(n, 0.0);
}

TrajectorySample TrajectoryBatch::sample(Eigen::Index k) const
{
  TrajectorySample s;
  const auto d = static_cast<std::size_t>(start.rows());
  s.start.assign(start.col(k).data(), start.col(k).data() + d);
  s.end.assign(end.col(k).data(), end.col(k).data() + d);
  s.exit_point.assign(exit_point.col(k).data(), exit_point.col(k).data() + d);
  s.interior = interior[k] != 0;
  s.exit_fraction = exit_fraction[k];
  s.work = work[k];
  return s;
}

void TrajectoryBatch::set(Eigen::Index k, const TrajectorySample& s)
{
  for (Eigen::Index i = 0; i < start.rows(); ++i) {
    start(i, k) = s.start[i];
    end(i, k) = s.end[i];
    exit_point(i, k) = s.exit_point.empty() ? s.end[i] : s.exit_point[i];
  }
  interior[k] = s.interior ? 1 : 0;
  exit_fraction[k] = s.exit_fraction;
  work[k] = s.work;
}

TrajectoryBatch simulate_batch(const PdeProblem& problem,
                               const Eigen::Ref<const Eigen::MatrixXd>& starts, double dt,
                               std::uint64_t seed, std::uint64_t iteration, double noise_sign)
{
  if (!(dt > 0.0))
    throw std::invalid_argument("simulate_batch: time step must be positive");
  const int d = problem.dim();
  if (starts.rows() != d)
    throw std::invalid_argument("simulate_batch: dimension mismatch");
  TrajectoryBatch batch;
  const Eigen::Index n = starts.cols();
  batch.resize(d, n);
  batch.start = starts;
  parallel_chunks(chunk_count(n), [&](std::size_t c, int) {
    std::vector<double> noise(d), drift(d);
    const auto begin = static_cast<Eigen::Index>(c * kChunkSize);
    const Eigen::Index stop = std::min<Eigen::Index>(n, begin + kChunkSize);
    for (Eigen::Index k = begin; k < stop; ++k) {
      RngStream rng(seed, stream_id(Purpose::pde_step, iteration, static_cast<std::uint64_t>(k)));
      brownian_increment(rng, dt, noise);
      if (noise_sign != 1.0)
        for (double& z : noise)
          z *= noise_sign;
      const StepResult r = step_into(
        problem, std::span<const double>(batch.start.col(k).data(), d), dt, noise,
        std::span<double>(batch.end.col(k).data(), d),
        std::span<double>(batch.exit_point.col(k).data(), d), drift);
      batch.interior[k] = r.interior ? 1 : 0;
      batch.exit_fraction[k] = r.fraction;
      batch.work[k] = r.work;
    }
  });
  return batch;
}

double residual_bracket(const PdeProblem& problem, const TrajectoryBatch& batch, Eigen::Index k,
                        double u_start, double u_end)
{
  double continuation;
  if (batch.interior[k]) {
    continuation = u_end;
  } else {
    const auto d = static_cast<std::size_t>(batch.exit_point.rows());
    continuation =
      problem.boundary_value(std::span<const double>(batch.exit_point.col(k).data(), d));
  }
  return u_start - continuation - batch.work[k];
}

GradientEstimate pde_grad_estimate(const PdeProblem& problem, const MlpModel& model,
                                   const TrajectoryBatch& batch, const TrajectoryBatch* mirror)
{
  const Eigen::Index n = batch.size();
  if (n < 1)
    throw std::invalid_argument("pde_grad_estimate: empty batch");
  if (mirror && mirror->size() != n)
    throw std::invalid_argument("pde_grad_estimate: mirror batch size mismatch");
  const double inv_n = 1.0 / static_cast<double>(n);
  auto total = detail::reduce_chunks(
    n, static_cast<Eigen::Index>(model.size()),
    [&](Eigen::Index begin, Eigen::Index len, detail::SlotAccumulator& slot,
        detail::Workspace& ws) {
      ws.u0.resize(len);
      ws.u1.resize(len);
      ws.seeds0.resize(len);
      forward_batch(model, batch.start.middleCols(begin, len), ws.u0, &ws.cache0);
      forward_batch(model, batch.end.middleCols(begin, len), ws.u1, &ws.cache1);
      if (mirror) {
        ws.seeds1.resize(len);
        forward_batch(model, mirror->end.middleCols(begin, len), ws.seeds1, &ws.cache1);
      }
      for (Eigen::Index j = 0; j < len; ++j) {
        double b = residual_bracket(problem, batch, begin + j, ws.u0[j], ws.u1[j]);
        if (mirror)
          b = 0.5 * (b + residual_bracket(problem, *mirror, begin + j, ws.u0[j], ws.seeds1[j]));
        slot.sums[0] += b;
        ws.seeds0[j] = b * inv_n;
      }
      accumulate_gradient(model, ws.cache0, ws.seeds0, slot.grad);
    });
  return {std::move(total.grad), total.sums[0] * inv_n};
}

GradientEstimate penalty_grad_estimate(const PdeProblem& problem, const MlpModel& model,
                                       const Eigen::Ref<const Eigen::MatrixXd>& points,
                                       double penalty)
{
  if (problem.domain.is_torus())
    throw std::invalid_argument("penalty_grad_estimate: no boundary on the torus");
  if (!(penalty >= 0.0))
    throw std::invalid_argument("penalty_grad_estimate: penalty must be nonnegative");
  const Eigen::Index n = points.cols();
  if (n < 1)
    throw std::invalid_argument("penalty_grad_estimate: empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto d = static_cast<std::size_t>(points.rows());
  auto total = detail::reduce_chunks(
    n, static_cast<Eigen::Index>(model.size()),
    [&](Eigen::Index begin, Eigen::Index len, detail::SlotAccumulator& slot,
        detail::Workspace& ws) {
      ws.u0.resize(len);
      ws.seeds0.resize(len);
      forward_batch(model, points.middleCols(begin, len), ws.u0, &ws.cache0);
      for (Eigen::Index j = 0; j < len; ++j) {
        const double r =
          problem.boundary_value(std::span<const double>(points.col(begin + j).data(), d));
        const double diff = ws.u0[j] - r;
        slot.sums[0] += diff;
        ws.seeds0[j] = 2.0 * penalty * diff * inv_n;
      }
      accumulate_gradient(model, ws.cache0, ws.seeds0, slot.grad);
    });
  return {std::move(total.grad), total.sums[0] * inv_n};
}

Eigen::VectorXd evaluate_batch(const MlpModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& points)
{
  const Eigen::Index n = points.cols();
  Eigen::VectorXd out(n);
  parallel_chunks(chunk_count(n), [&](std::size_t c, int) {
    const auto begin = static_cast<Eigen::Index>(c * kChunkSize);
    const Eigen::Index len = std::min<Eigen::Index>(kChunkSize, n - begin);
    thread_local ForwardCache cache;
    forward_batch(model, points.middleCols(begin, len), out.segment(begin, len), &cache);
  });
  return out;
}

double LearningRateSchedule::at(std::int64_t iteration, std::int64_t total) const
{
  if (late > 0.0 && static_cast<double>(iteration) > switch_fraction * static_cast<double>(total))
    return late;
  return initial;
}

std::int64_t iterations_per_epoch(std::int64_t n, std::int64_t b)
{
  if (n < 1 || b < 1)
    throw std::invalid_argument("iterations_per_epoch: sizes must be positive");
  return (n + b - 1) / b;
}

Eigen::MatrixXd sample_points(const DensitySampler& sampler, std::int64_t n, std::uint64_t seed,
                              Purpose purpose, std::uint64_t iteration)
{
  const int d = sampler.domain().dim;
  Eigen::MatrixXd pts(d, n);
  parallel_chunks(chunk_count(static_cast<std::size_t>(n)), [&](std::size_t c, int) {
    const auto begin = static_cast<std::int64_t>(c * kChunkSize);
    const std::int64_t stop = std::min<std::int64_t>(n, begin + kChunkSize);
    for (std::int64_t k = begin; k < stop; ++k) {
      RngStream rng(seed, stream_id(purpose, iteration, static_cast<std::uint64_t>(k)));
      sampler.sample(rng, std::span<double>(pts.col(k).data(), d));
    }
  });
  return pts;
}

double pde_test_error(const PdeProblem& problem, const MlpModel& model,
                      std::int64_t test_samples, std::uint64_t seed, int table_size)
{
  if (!problem.exact)
    throw std::invalid_argument("pde_test_error: problem has no closed-form solution");
  const DensitySampler rho(problem.domain, problem.rho_spec(table_size));
  const Eigen::MatrixXd pts = sample_points(rho, test_samples, seed, Purpose::test_set);
  const Eigen::VectorXd u = evaluate_batch(model, pts);
  std::vector<double> ref(test_samples);
  for (std::int64_t k = 0; k < test_samples; ++k)
    ref[k] = problem.exact(std::span<const double>(pts.col(k).data(), pts.rows()));
  return error_E0(std::span<const double>(u.data(), u.size()), ref);
}

PdeTrainResult train_pde(const PdeProblem& problem, const PdeTrainOptions& opt,
                         const PdeCallbacks& callbacks)
{
  validate(problem);
  if (!(opt.dt > 0.0) || opt.batch_size < 1 || opt.iterations < 0 || opt.aux_batch_size < 1)
    throw std::invalid_argument("train_pde: dt, batch sizes and iteration count must be positive");
  const bool dirichlet = !problem.domain.is_torus();
  const int d = problem.dim();
  const auto clock_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  };

  const DensitySampler rho(problem.domain, problem.rho_spec(opt.table_size));
  PdeTrainResult result;
  result.model = MlpModel::initialized(d, opt.width, opt.trig_level, opt.seed, opt.init_gain);
  MlpModel& model = result.model;
  AdamState adam(static_cast<Eigen::Index>(model.size()));

  // Held-out rho test set for E0.
  Eigen::MatrixXd test_points;
  std::vector<double> test_exact;
  if (problem.exact && opt.test_samples > 0) {
    test_points = sample_points(rho, opt.test_samples, opt.seed, Purpose::test_set);
    test_exact.resize(opt.test_samples);
    for (std::int64_t k = 0; k < opt.test_samples; ++k)
      test_exact[k] = problem.exact(std::span<const double>(test_points.col(k).data(), d));
  }
  // Uniform batch for removing the free constant on the torus.
  Eigen::MatrixXd mean_points;
  if (!dirichlet) {
    const DensitySampler uniform(problem.domain, DensitySpec{});
    mean_points = sample_points(uniform, opt.aux_batch_size, opt.seed, Purpose::mean_shift);
  }
  auto test_error = [&](const MlpModel& m) {
    if (test_exact.empty())
      return std::nan("");
    MlpModel centered = m;
    if (!dirichlet)
      shift_by_mean(centered, mean_points);
    const Eigen::VectorXd u = evaluate_batch(centered, test_points);
    return error_E0(std::span<const double>(u.data(), u.size()), test_exact);
  };

  Eigen::MatrixXd train_set;
  std::vector<std::int64_t> order;
  std::int64_t per_epoch = 0;
  if (opt.training_samples > 0) {
    train_set = sample_points(rho, opt.training_samples, opt.seed, Purpose::training_set);
    per_epoch = iterations_per_epoch(opt.training_samples, opt.batch_size);
    order.resize(opt.training_samples);
  }
  const double epoch_len =
    static_cast<double>(opt.training_samples > 0 ? opt.training_samples : opt.batch_size);

  auto emit = [&](std::int64_t t, double bracket_mean, double grad_norm) {
    PdeMetricsRecord rec;
    rec.iteration = t;
    rec.epoch = static_cast<double>(t) * static_cast<double>(opt.batch_size) / epoch_len;
    if (per_epoch > 0)
      rec.epoch = static_cast<double>(t) / static_cast<double>(per_epoch);
    rec.e0 = test_error(model);
    rec.bracket_mean = bracket_mean;
    rec.grad_norm = grad_norm;
    rec.seconds = elapsed();
    result.metrics.push_back(rec);
    if (callbacks.on_record)
      callbacks.on_record(rec);
  };

  emit(0, std::nan(""), std::nan(""));
  if (opt.iterations == 0)
    return result;

  const bool penalize = dirichlet && opt.use_penalty && opt.penalty > 0.0;
  std::optional<DensitySampler> boundary;
  if (penalize)
    boundary.emplace(problem.domain, DensitySpec{DensityKind::boundary_uniform, {}, 0});
  Eigen::MatrixXd starts;
  double last_bracket = 0.0, last_norm = 0.0;

  for (std::int64_t t = 1; t <= opt.iterations; ++t) {
    if (per_epoch > 0) {
      const std::int64_t epoch = (t - 1) / per_epoch;
      const std::int64_t pos = (t - 1) % per_epoch;
      if (pos == 0) {
        std::iota(order.begin(), order.end(), 0);
        RngStream rng(opt.seed, stream_id(Purpose::shuffle, static_cast<std::uint64_t>(epoch), 0));
        for (std::int64_t i = opt.training_samples - 1; i > 0; --i) {
          const auto j = static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
          std::swap(order[i], order[j]);
        }
      }
      const std::int64_t begin = pos * opt.batch_size;
      const std::int64_t len = std::min(opt.batch_size, opt.training_samples - begin);
      starts.resize(d, len);
      for (std::int64_t k = 0; k < len; ++k)
        starts.col(k) = train_set.col(order[begin + k]);
    } else {
      starts = sample_points(rho, opt.batch_size, opt.seed, Purpose::training_set,
                             static_cast<std::uint64_t>(t));
    }

    const TrajectoryBatch batch =
      simulate_batch(problem, starts, opt.dt, opt.seed, static_cast<std::uint64_t>(t));
    GradientEstimate est;
    if (opt.antithetic) {
      const TrajectoryBatch mirror =
        simulate_batch(problem, starts, opt.dt, opt.seed, static_cast<std::uint64_t>(t), -1.0);
      est = pde_grad_estimate(problem, model, batch, &mirror);
    } else {
      est = pde_grad_estimate(problem, model, batch);
    }
    if (penalize) {
      const Eigen::MatrixXd bpts = sample_points(*boundary, opt.aux_batch_size, opt.seed,
                                                 Purpose::boundary, static_cast<std::uint64_t>(t));
      est.gradient += penalty_grad_estimate(problem, model, bpts, opt.penalty).gradient;
    }
    // the output shift is reserved for mean removal
    est.gradient[static_cast<Eigen::Index>(model.shift_index())] = 0.0;
    const double norm = est.gradient.norm();
    if (!std::isfinite(norm))
      throw NumericError("train_pde: gradient is not finite at iteration " + std::to_string(t));
    adam_step(model.parameters(), adam, est.gradient, opt.learning_rate.at(t, opt.iterations));
    last_bracket = est.bracket_mean;
    last_norm = norm;

    if (opt.eval_every > 0 && t % opt.eval_every == 0 && t != opt.iterations)
      emit(t, last_bracket, last_norm);
    if (callbacks.on_checkpoint && opt.checkpoint_every > 0 && t % opt.checkpoint_every == 0)
      callbacks.on_checkpoint(t, model);
  }

  if (!dirichlet)
    result.removed_mean = shift_by_mean(model, mean_points);
  emit(opt.iterations, last_bracket, last_norm);
  return result;
}

} // namespace semigroup
