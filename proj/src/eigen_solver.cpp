#include "semigroup/eigen_solver.hpp"

#include "batch_reduce.hpp"
#include "semigroup/geometry.hpp"
#include "semigroup/io.hpp"
#include "semigroup/parallel.hpp"
#include "semigroup/reference.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace semigroup {

namespace {

void check_pair(const MlpModel& model, const EigenProblem& problem, std::span<const double> x,
                std::span<const double> w)
{
  const auto d = static_cast<std::size_t>(problem.dim());
  if (x.size() != d || w.size() != d || model.dim() != problem.dim())
    throw std::invalid_argument("eigen gradient: dimension mismatch");
}

std::vector<double> shifted(std::span<const double> x, std::span<const double> w, double sign)
{
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = x[i] + sign * w[i];
  wrap_periodic(y);
  return y;
}

// Columns of x + sign * w, wrapped to the torus.
void shifted_block(const Eigen::Ref<const Eigen::MatrixXd>& x,
                   const Eigen::Ref<const Eigen::MatrixXd>& w, double sign, Eigen::MatrixXd& out)
{
  out = x + sign * w;
  for (Eigen::Index k = 0; k < out.cols(); ++k)
    wrap_periodic(std::span<double>(out.col(k).data(), out.rows()));
}

} // namespace

double scheme1_bracket(double u, double u_next, double v, double g, double c_scale, double dt)
{
  return (u - u_next) / dt + (0.5 * v + c_scale * g) * u;
}

Scheme2Seeds scheme2_seeds(double u, double u_next, double v, double g, double c_scale, double dt)
{
  const double diff = (u - u_next) / dt;
  return {diff + (v + c_scale * g) * u, -diff};
}

Eigen::VectorXd scheme1_grad_sample(const MlpModel& model, const EigenProblem& problem,
                                    std::span<const double> x, std::span<const double> w,
                                    double g, double c_scale, double dt)
{
  check_pair(model, problem, x, w);
  if (!(dt > 0.0))
    throw std::invalid_argument("scheme1_grad_sample: time step must be positive");
  const ValueAndGrad at_x = value_and_grad(model, x);
  const double u_next = forward(model, shifted(x, w, 1.0));
  return at_x.grad *
         scheme1_bracket(at_x.value, u_next, problem.potential(x), g, c_scale, dt);
}

Eigen::VectorXd scheme2_grad_sample(const MlpModel& model, const EigenProblem& problem,
                                    std::span<const double> x, std::span<const double> w,
                                    double g, double c_scale, double dt)
{
  check_pair(model, problem, x, w);
  if (!(dt > 0.0))
    throw std::invalid_argument("scheme2_grad_sample: time step must be positive");
  const ValueAndGrad at_x = value_and_grad(model, x);
  const ValueAndGrad at_y = value_and_grad(model, shifted(x, w, 1.0));
  const Scheme2Seeds s =
    scheme2_seeds(at_x.value, at_y.value, problem.potential(x), g, c_scale, dt);
  return at_x.grad * s.at_x + at_y.grad * s.at_next;
}

double dual_epsilon(double mean_square, bool literal_max)
{
  const double raw = mean_square - 1.0;
  return literal_max ? std::max(raw, 1.0) : std::min(raw, 1.0);
}

double dual_epsilon(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points,
                    bool literal_max)
{
  if (points.cols() < 1)
    throw std::invalid_argument("dual_epsilon: empty batch");
  const Eigen::VectorXd u = evaluate_batch(model, points);
  return dual_epsilon(u.squaredNorm() / static_cast<double>(u.size()), literal_max);
}

void dual_update(DualState& state, double eps)
{
  if (!state.has_prev || eps * state.eps_prev < 0.0) {
    const double sign = eps > 0.0 ? 1.0 : (eps < 0.0 ? -1.0 : 0.0);
    state.g = sign * state.g_default;
  } else {
    state.g += state.dual_lr * state.c_scale * eps / 2.0;
  }
  state.eps_prev = eps;
  state.has_prev = true;
}

EigenBatch draw_eigen_batch(int dim, std::int64_t n, double dt, std::uint64_t seed,
                            Purpose purpose, std::uint64_t iteration)
{
  if (!(dt > 0.0) || n < 1 || dim < 1)
    throw std::invalid_argument("draw_eigen_batch: need positive size and time step");
  EigenBatch b;
  b.x.resize(dim, n);
  b.w.resize(dim, n);
  parallel_chunks(chunk_count(static_cast<std::size_t>(n)), [&](std::size_t c, int) {
    const auto begin = static_cast<std::int64_t>(c * kChunkSize);
    const std::int64_t stop = std::min<std::int64_t>(n, begin + kChunkSize);
    for (std::int64_t k = begin; k < stop; ++k) {
      RngStream rng(seed, stream_id(purpose, iteration, static_cast<std::uint64_t>(k)));
      sample_uniform_torus(rng, std::span<double>(b.x.col(k).data(), dim));
      brownian_increment(rng, dt, std::span<double>(b.w.col(k).data(), dim));
    }
  });
  return b;
}

EigenGradient eigen_grad_estimate(EigenScheme scheme, const EigenProblem& problem,
                                  const MlpModel& model, const EigenBatch& batch, double g,
                                  double c_scale, double dt)
{
  const Eigen::Index n = batch.x.cols();
  if (n < 1 || batch.w.cols() != n)
    throw std::invalid_argument("eigen_grad_estimate: empty or mismatched batch");
  if (!(dt > 0.0))
    throw std::invalid_argument("eigen_grad_estimate: time step must be positive");
  const int d = problem.dim();
  const double inv_n = 1.0 / static_cast<double>(n);
  const bool two_sided = scheme == EigenScheme::scheme2;

  auto total = detail::reduce_chunks(
    n, static_cast<Eigen::Index>(model.size()),
    [&](Eigen::Index begin, Eigen::Index len, detail::SlotAccumulator& slot,
        detail::Workspace& ws) {
      const auto xs = batch.x.middleCols(begin, len);
      shifted_block(xs, batch.w.middleCols(begin, len), 1.0, ws.points);
      ws.u0.resize(len);
      ws.u1.resize(len);
      ws.seeds0.resize(len);
      forward_batch(model, xs, ws.u0, &ws.cache0);
      forward_batch(model, ws.points, ws.u1, two_sided ? &ws.cache1 : nullptr);
      if (two_sided)
        ws.seeds1.resize(len);
      for (Eigen::Index j = 0; j < len; ++j) {
        const double u = ws.u0[j];
        const double v = problem.potential(std::span<const double>(xs.col(j).data(), d));
        if (two_sided) {
          const Scheme2Seeds s = scheme2_seeds(u, ws.u1[j], v, g, c_scale, dt);
          ws.seeds0[j] = s.at_x * inv_n;
          ws.seeds1[j] = s.at_next * inv_n;
        } else {
          ws.seeds0[j] = scheme1_bracket(u, ws.u1[j], v, g, c_scale, dt) * inv_n;
        }
        slot.sums[0] += u * u;
      }
      accumulate_gradient(model, ws.cache0, ws.seeds0, slot.grad);
      if (two_sided)
        accumulate_gradient(model, ws.cache1, ws.seeds1, slot.grad);
    });
  return {std::move(total.grad), total.sums[0] * inv_n};
}

namespace {

void check_readout(const EigenBatch& batch, double dt, const LambdaOptions& options)
{
  if (batch.x.cols() < 2 || batch.w.cols() != batch.x.cols())
    throw std::invalid_argument("lambda_estimate: need at least two paired samples");
  if (!(dt > 0.0))
    throw std::invalid_argument("lambda_estimate: time step must be positive");
  if (options.norm == LambdaNorm::unit && !(options.norm_value > 0.0))
    throw std::invalid_argument("lambda_estimate: norm must be positive");
}

// u at x, x + w and (antithetic only) x - w, plus V(x), for every column.
LambdaEstimate lambda_from_values(EigenScheme scheme, const Eigen::VectorXd& u0,
                                  const Eigen::VectorXd& up, const Eigen::VectorXd& um,
                                  const Eigen::VectorXd& v, double dt,
                                  const LambdaOptions& options)
{
  const Eigen::Index n = u0.size();
  // sums of a, a^2, b, b^2, a b with a the readout numerator and b = u^2
  double s_a = 0.0, s_aa = 0.0, s_b = 0.0, s_bb = 0.0, s_ab = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double u = u0[j];
    double a;
    if (scheme == EigenScheme::scheme1) {
      const double mean_next = options.antithetic ? 0.5 * (up[j] + um[j]) : up[j];
      a = 2.0 / dt * u * (u - mean_next);
    } else {
      const double p = u - up[j];
      double sq = p * p;
      if (options.antithetic) {
        const double q = u - um[j];
        sq = 0.5 * (sq + q * q);
      }
      a = sq / dt;
    }
    a += v[j] * u * u;
    const double b = u * u;
    s_a += a;
    s_aa += a * a;
    s_b += b;
    s_bb += b * b;
    s_ab += a * b;
  }

  const double nn = static_cast<double>(n);
  const double ma = s_a / nn, mb = s_b / nn;
  const double var_a = std::max(0.0, (s_aa - nn * ma * ma) / (nn - 1.0));
  LambdaEstimate est;
  if (options.norm == LambdaNorm::unit) {
    est.value = ma / options.norm_value;
    est.standard_error = std::sqrt(var_a / nn) / options.norm_value;
    return est;
  }
  if (!(mb > 0.0))
    throw std::invalid_argument("lambda_estimate: function has zero norm on the batch");
  const double r = ma / mb;
  const double var_b = (s_bb - nn * mb * mb) / (nn - 1.0);
  const double cov = (s_ab - nn * ma * mb) / (nn - 1.0);
  const double var_ratio = std::max(0.0, var_a - 2.0 * r * cov + r * r * var_b);
  est.value = r;
  est.standard_error = std::sqrt(var_ratio / nn) / mb;
  return est;
}

Eigen::VectorXd potential_values(const EigenProblem& problem, const Eigen::MatrixXd& x)
{
  Eigen::VectorXd v(x.cols());
  for (Eigen::Index k = 0; k < x.cols(); ++k)
    v[k] = problem.potential(std::span<const double>(x.col(k).data(), x.rows()));
  return v;
}

} // namespace

LambdaEstimate lambda_estimate(EigenScheme scheme, const EigenProblem& problem,
                               const MlpModel& model, const EigenBatch& batch, double dt,
                               const LambdaOptions& options)
{
  check_readout(batch, dt, options);
  Eigen::MatrixXd moved;
  const Eigen::VectorXd u0 = evaluate_batch(model, batch.x);
  shifted_block(batch.x, batch.w, 1.0, moved);
  const Eigen::VectorXd up = evaluate_batch(model, moved);
  Eigen::VectorXd um;
  if (options.antithetic) {
    shifted_block(batch.x, batch.w, -1.0, moved);
    um = evaluate_batch(model, moved);
  }
  return lambda_from_values(scheme, u0, up, um, potential_values(problem, batch.x), dt, options);
}

LambdaEstimate lambda_estimate(EigenScheme scheme, const EigenProblem& problem,
                               const std::function<double(std::span<const double>)>& field,
                               const EigenBatch& batch, double dt, const LambdaOptions& options)
{
  check_readout(batch, dt, options);
  const Eigen::Index n = batch.x.cols();
  Eigen::MatrixXd plus, minus;
  shifted_block(batch.x, batch.w, 1.0, plus);
  shifted_block(batch.x, batch.w, -1.0, minus);
  Eigen::VectorXd u0(n), up(n), um(n);
  const auto d = static_cast<std::size_t>(batch.x.rows());
  for (Eigen::Index k = 0; k < n; ++k) {
    u0[k] = field(std::span<const double>(batch.x.col(k).data(), d));
    up[k] = field(std::span<const double>(plus.col(k).data(), d));
    um[k] = field(std::span<const double>(minus.col(k).data(), d));
  }
  return lambda_from_values(scheme, u0, up, um, potential_values(problem, batch.x), dt, options);
}

LambdaEstimate final_lambda(EigenScheme scheme, const EigenProblem& problem,
                            const MlpModel& model, double dt, int repeats, std::int64_t n,
                            std::uint64_t seed, const LambdaOptions& options)
{
  if (repeats < 1)
    throw std::invalid_argument("final_lambda: need at least one repeat");
  double sum = 0.0, sum_sq = 0.0, se_sq = 0.0;
  for (int r = 0; r < repeats; ++r) {
    const EigenBatch b = draw_eigen_batch(problem.dim(), n, dt, seed, Purpose::lambda_readout,
                                          static_cast<std::uint64_t>(r));
    const LambdaEstimate e = lambda_estimate(scheme, problem, model, b, dt, options);
    sum += e.value;
    sum_sq += e.value * e.value;
    se_sq += e.standard_error * e.standard_error;
  }
  const double k = repeats;
  LambdaEstimate out;
  out.value = sum / k;
  if (repeats > 1) {
    const double var = std::max(0.0, (sum_sq - k * out.value * out.value) / (k - 1.0));
    out.standard_error = std::sqrt(var / k);
  } else {
    out.standard_error = std::sqrt(se_sq);
  }
  return out;
}

double eigen_test_error(const EigenProblem& problem, const MlpModel& model, std::int64_t n,
                        std::uint64_t seed, int modes)
{
  const TensorGroundState ref(problem.coefficients, modes);
  const DensitySampler uniform(Domain{DomainKind::torus, problem.dim()}, DensitySpec{});
  const Eigen::MatrixXd pts = sample_points(uniform, n, seed, Purpose::test_set);
  const Eigen::VectorXd u = evaluate_batch(model, pts);
  std::vector<double> exact(n);
  for (std::int64_t k = 0; k < n; ++k)
    exact[k] = ref(std::span<const double>(pts.col(k).data(), pts.rows()));
  return error_E0(std::span<const double>(u.data(), u.size()), exact, true);
}

EigenTrainResult train_eigen(const EigenProblem& problem, const EigenTrainOptions& opt,
                             const EigenCallbacks& callbacks)
{
  const int d = problem.dim();
  if (d < 1)
    throw std::invalid_argument("train_eigen: dimension must be at least 1");
  if (!(opt.dt > 0.0) || opt.batch_size < 1 || opt.aux_batch_size < 1 || opt.iterations < 0 ||
      opt.test_samples < 1 || opt.lambda_samples < 2)
    throw std::invalid_argument("train_eigen: sizes and time step must be positive");
  const auto clock_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  };

  EigenTrainResult result;
  result.model = MlpModel::initialized(d, opt.width, opt.trig_level, opt.seed, opt.init_gain);
  MlpModel& model = result.model;
  result.dual.g_default = opt.g_default;
  result.dual.c_scale = opt.c_scale;
  result.dual.dual_lr = opt.dual_lr;
  DualState& dual = result.dual;
  AdamState adam(static_cast<Eigen::Index>(model.size()));

  const TensorGroundState ref(problem.coefficients, opt.spectral_modes);
  result.lambda_reference = ref.eigenvalue();
  const DensitySampler uniform(Domain{DomainKind::torus, d}, DensitySpec{});
  const Eigen::MatrixXd test_points = sample_points(uniform, opt.test_samples, opt.seed,
                                                    Purpose::test_set);
  std::vector<double> test_exact(opt.test_samples);
  for (std::int64_t k = 0; k < opt.test_samples; ++k)
    test_exact[k] = ref(std::span<const double>(test_points.col(k).data(), d));

  auto emit = [&](std::int64_t t, const LambdaEstimate& lam) {
    EigenMetricsRecord rec;
    rec.iteration = t;
    const Eigen::VectorXd u = evaluate_batch(model, test_points);
    rec.e0 = error_E0(std::span<const double>(u.data(), u.size()), test_exact, true);
    rec.norm_residual = u.squaredNorm() / static_cast<double>(u.size()) - 1.0;
    rec.lambda = lam.value;
    rec.e1 = error_E1(lam.value, result.lambda_reference).value;
    rec.g = dual.g;
    rec.seconds = elapsed();
    result.metrics.push_back(rec);
    if (callbacks.on_record)
      callbacks.on_record(rec);
    return rec;
  };
  // Readouts during training come from the test stream, past the test points.
  auto training_lambda = [&](std::int64_t t) {
    const EigenBatch b = draw_eigen_batch(d, opt.lambda_samples, opt.dt, opt.seed,
                                          Purpose::test_set, static_cast<std::uint64_t>(t + 1));
    return lambda_estimate(opt.scheme, problem, model, b, opt.dt, opt.lambda);
  };

  if (opt.iterations == 0) {
    const LambdaEstimate lam = training_lambda(0);
    const EigenMetricsRecord rec = emit(0, lam);
    result.lambda = lam.value;
    result.lambda_standard_error = lam.standard_error;
    result.e0 = rec.e0;
    result.e1 = rec.e1;
    result.norm_residual = rec.norm_residual;
    return result;
  }
  emit(0, training_lambda(0));

  for (std::int64_t t = 1; t <= opt.iterations; ++t) {
    const auto it = static_cast<std::uint64_t>(t);
    const EigenBatch batch =
      draw_eigen_batch(d, opt.batch_size, opt.dt, opt.seed, Purpose::eigen_batch, it);
    EigenGradient est =
      eigen_grad_estimate(opt.scheme, problem, model, batch, dual.g, opt.c_scale, opt.dt);
    est.gradient[static_cast<Eigen::Index>(model.shift_index())] = 0.0;
    if (!std::isfinite(est.gradient.norm()))
      throw NumericError("train_eigen: gradient is not finite at iteration " + std::to_string(t));

    const Eigen::MatrixXd dual_points =
      sample_points(uniform, opt.aux_batch_size, opt.seed, Purpose::eigen_dual, it);
    dual_update(dual, dual_epsilon(model, dual_points, opt.literal_max_clip));

    adam_step(model.parameters(), adam, est.gradient, opt.learning_rate.at(t, opt.iterations));

    if (opt.eval_every > 0 && t % opt.eval_every == 0 && t != opt.iterations)
      emit(t, training_lambda(t));
    if (callbacks.on_checkpoint && opt.checkpoint_every > 0 && t % opt.checkpoint_every == 0)
      callbacks.on_checkpoint(t, model, dual);
  }

  const LambdaEstimate lam = final_lambda(opt.scheme, problem, model, opt.dt,
                                          opt.final_lambda_repeats, opt.final_lambda_samples,
                                          opt.seed, opt.lambda);
  const EigenMetricsRecord rec = emit(opt.iterations, lam);
  result.lambda = lam.value;
  result.lambda_standard_error = lam.standard_error;
  result.e0 = rec.e0;
  result.e1 = rec.e1;
  result.norm_residual = rec.norm_residual;
  return result;
}

std::string encode_dual_state(const DualState& s)
{
  std::ostringstream out;
  out << "g=" << format_double(s.g) << "\n"
      << "eps_prev=" << format_double(s.eps_prev) << "\n"
      << "has_prev=" << (s.has_prev ? 1 : 0) << "\n"
      << "g_default=" << format_double(s.g_default) << "\n"
      << "c_scale=" << format_double(s.c_scale) << "\n"
      << "dual_lr=" << format_double(s.dual_lr) << "\n";
  return out.str();
}

DualState decode_dual_state(const std::string& text)
{
  DualState s;
  std::istringstream in(text);
  std::string line;
  int seen = 0;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("dual state: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    double value;
    try {
      value = std::stod(line.substr(eq + 1));
    } catch (const std::exception&) {
      throw FormatError("dual state: bad value for '" + key + "'");
    }
    if (key == "g")
      s.g = value;
    else if (key == "eps_prev")
      s.eps_prev = value;
    else if (key == "has_prev")
      s.has_prev = value != 0.0;
    else if (key == "g_default")
      s.g_default = value;
    else if (key == "c_scale")
      s.c_scale = value;
    else if (key == "dual_lr")
      s.dual_lr = value;
    else
      throw FormatError("dual state: unknown key '" + key + "'");
    ++seen;
  }
  if (seen != 6)
    throw FormatError("dual state: expected 6 fields");
  return s;
}

} // namespace semigroup
