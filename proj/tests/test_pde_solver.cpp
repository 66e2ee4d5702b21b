#include "semigroup/io.hpp"
#include "semigroup/parallel.hpp"
#include "semigroup/pde_solver.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

using namespace semigroup;

namespace {

// Ball with a = 1, f = const, r = const.
PdeProblem flat_ball(int d, double f, double r)
{
  PdeProblem p;
  p.name = "flat";
  p.domain = {DomainKind::unit_ball, d};
  p.coefficient.shape = CoefficientShape::radial;
  p.coefficient.factor = [](double) { return 1.0; };
  p.coefficient.log_slope = [](double) { return 0.0; };
  p.source = [f](std::span<const double>) { return f; };
  p.boundary = [r](std::span<const double>) { return r; };
  return p;
}

std::vector<double> col(const Eigen::MatrixXd& m, Eigen::Index k)
{
  return {m.col(k).data(), m.col(k).data() + m.rows()};
}

} // namespace

TEST_CASE("a zero-noise step with no drift stays put")
{
  const PdeProblem p = flat_ball(3, 2.5, 0.0);
  const std::vector<double> x{0.1, 0.2, -0.3}, zero(3, 0.0);
  const TrajectorySample s = simulate_step(p, x, 1e-3, zero);
  CHECK(s.end == x);
  CHECK(s.interior);
  CHECK(s.exit_fraction == 1.0);
  CHECK(s.work == doctest::Approx(2.5e-3).epsilon(1e-15));
}

TEST_CASE("an exiting ball step lands on the sphere with prorated work")
{
  const PdeProblem p = ball_problem(3);
  const std::vector<double> x{0.99, 0.0, 0.0}, noise{0.05, 0.01, 0.0};
  const double dt = 1e-4;
  const TrajectorySample s = simulate_step(p, x, dt, noise);
  REQUIRE_FALSE(s.interior);
  // endpoint from the drift -4x and noise sqrt2 * w
  std::vector<double> y(3);
  for (int i = 0; i < 3; ++i)
    y[i] = x[i] - 4.0 * x[i] * dt + std::numbers::sqrt2 * noise[i];
  CHECK(s.end[0] == doctest::Approx(y[0]).epsilon(1e-15));
  // larger root of |x + t (y - x)|^2 = 1
  double a = 0.0, b = 0.0, c = -1.0;
  for (int i = 0; i < 3; ++i) {
    a += (y[i] - x[i]) * (y[i] - x[i]);
    b += 2.0 * x[i] * (y[i] - x[i]);
    c += x[i] * x[i];
  }
  const double t = (-b + std::sqrt(b * b - 4 * a * c)) / (2 * a);
  CHECK(s.exit_fraction == doctest::Approx(t).epsilon(1e-12));
  double r2 = 0.0;
  for (double v : s.exit_point)
    r2 += v * v;
  CHECK(std::abs(r2 - 1.0) <= 1e-12);
  CHECK(s.work == doctest::Approx(p.f_over_a(x) * t * dt).epsilon(1e-12));
}

TEST_CASE("torus steps wrap and never exit")
{
  const PdeProblem p = torus_problem(2);
  const std::vector<double> x{0.95, 0.95}, noise{0.05, 0.1};
  const TrajectorySample s = simulate_step(p, x, 1e-4, noise);
  CHECK(s.interior);
  for (double v : s.end) {
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
  CHECK(s.end[1] < 0.5);
}

TEST_CASE("non-finite drift is a numeric error")
{
  PdeProblem p = flat_ball(2, 0.0, 0.0);
  p.coefficient.log_slope = [](double) { return std::numeric_limits<double>::quiet_NaN(); };
  const std::vector<double> x{0.1, 0.1}, noise{0.0, 0.0};
  CHECK_THROWS_AS(simulate_step(p, x, 1e-3, noise), NumericError);
  CHECK_THROWS_AS(simulate_step(p, x, 0.0, noise), std::invalid_argument);
}

TEST_CASE("a constant model matching constant data has zero residual")
{
  const PdeProblem p = flat_ball(3, 0.0, 1.75);
  MlpModel m(3, 8, 0);
  m.parameters()[m.head_bias_index()] = 1.75;
  const DensitySampler rho(p.domain, p.rho_spec());
  const auto pts = sample_points(rho, 3000, 2, Purpose::training_set);
  // steps large enough that many samples exit
  const auto batch = simulate_batch(p, pts, 1e-2, 2, 0);
  int exits = 0;
  for (bool in : batch.interior)
    exits += !in;
  CHECK(exits > 100);
  const GradientEstimate g = pde_grad_estimate(p, m, batch);
  CHECK(g.bracket_mean == 0.0);
  CHECK(g.gradient.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("batched gradient equals the per-sample definition")
{
  for (const PdeProblem& p : {ball_problem(3), torus_problem(3)}) {
    const auto m = MlpModel::initialized(3, 16, p.domain.is_torus() ? 1 : 0, 9);
    const DensitySampler rho(p.domain, p.rho_spec());
    const auto pts = sample_points(rho, 2500, 5, Purpose::training_set);
    const auto batch = simulate_batch(p, pts, 1e-3, 5, 3);
    const auto mirror = simulate_batch(p, pts, 1e-3, 5, 3, -1.0);
    const GradientEstimate g = pde_grad_estimate(p, m, batch);
    const GradientEstimate ga = pde_grad_estimate(p, m, batch, &mirror);

    Eigen::VectorXd expected = Eigen::VectorXd::Zero(m.size());
    Eigen::VectorXd expected_anti = Eigen::VectorXd::Zero(m.size());
    double bracket = 0.0;
    for (Eigen::Index k = 0; k < pts.cols(); ++k) {
      const ValueAndGrad vg = value_and_grad(m, col(batch.start, k));
      const double br = residual_bracket(p, batch, k, vg.value, forward(m, col(batch.end, k)));
      const double br2 = residual_bracket(p, mirror, k, vg.value, forward(m, col(mirror.end, k)));
      expected += br * vg.grad;
      expected_anti += 0.5 * (br + br2) * vg.grad;
      bracket += br;
    }
    const double n = static_cast<double>(pts.cols());
    expected /= n;
    expected_anti /= n;
    CHECK((g.gradient - expected).cwiseAbs().maxCoeff() <= 1e-11);
    CHECK((ga.gradient - expected_anti).cwiseAbs().maxCoeff() <= 1e-11);
    CHECK(g.bracket_mean == doctest::Approx(bracket / n).epsilon(1e-10));
  }
}

TEST_CASE("mirrored batches negate the increment")
{
  const PdeProblem p = torus_problem(2);
  Eigen::MatrixXd pts(2, 1);
  pts << 0.3, 0.6;
  const auto a = simulate_batch(p, pts, 1e-3, 1, 0);
  const auto b = simulate_batch(p, pts, 1e-3, 1, 0, -1.0);
  std::vector<double> drift(2);
  p.coefficient.grad_potential(col(pts, 0), drift);
  for (int i = 0; i < 2; ++i) {
    const double mean = pts(i, 0) - drift[i] * 1e-3;
    CHECK(a.end(i, 0) - mean == doctest::Approx(mean - b.end(i, 0)).epsilon(1e-10));
  }
}

TEST_CASE("penalty gradient")
{
  const PdeProblem p = ball_problem(2);
  auto m = MlpModel::initialized(2, 6, 0, 4);
  Eigen::MatrixXd pts(2, 1);
  pts << 0.6, 0.8;
  const GradientEstimate g = penalty_grad_estimate(p, m, pts, 0.8);
  const ValueAndGrad vg = value_and_grad(m, col(pts, 0));
  const Eigen::VectorXd expected = 2 * 0.8 * (vg.value - std::exp(2.0)) * vg.grad;
  CHECK((g.gradient - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(penalty_grad_estimate(p, m, pts, 0.0).gradient.cwiseAbs().maxCoeff() == 0.0);

  MlpModel exact(2, 4, 0);
  exact.parameters()[exact.head_bias_index()] = std::exp(2.0);
  CHECK(penalty_grad_estimate(p, exact, pts, 0.8).gradient.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(penalty_grad_estimate(torus_problem(2), m, pts, 0.8), std::invalid_argument);
  CHECK_THROWS_AS(penalty_grad_estimate(p, m, pts, -1.0), std::invalid_argument);
}

TEST_CASE("learning rate schedule and epoch length")
{
  const LearningRateSchedule s{8e-4, 3e-4, 0.5};
  CHECK(s.at(0, 100) == 8e-4);
  CHECK(s.at(50, 100) == 8e-4);
  CHECK(s.at(51, 100) == 3e-4);
  const LearningRateSchedule flat{1e-3, 0.0, 0.5};
  CHECK(flat.at(99, 100) == 1e-3);
  CHECK(iterations_per_epoch(1000000, 70000) == 15);
  CHECK(iterations_per_epoch(70000, 70000) == 1);
  CHECK_THROWS_AS(iterations_per_epoch(0, 10), std::invalid_argument);
}

TEST_CASE("zero iterations returns the initialized model")
{
  PdeTrainOptions o;
  o.width = 8;
  o.batch_size = 64;
  o.iterations = 0;
  o.penalty = 0.8;
  o.test_samples = 200;
  o.seed = 3;
  const PdeTrainResult r = train_pde(ball_problem(2), o);
  CHECK(r.model.parameters() == MlpModel::initialized(2, 8, 0, 3).parameters());
  REQUIRE(r.metrics.size() == 1);
  CHECK(r.metrics[0].iteration == 0);
}

TEST_CASE("training is independent of the worker count")
{
  PdeTrainOptions o;
  o.width = 8;
  o.trig_level = 1;
  o.batch_size = 3000;
  o.aux_batch_size = 500;
  o.iterations = 4;
  o.eval_every = 2;
  o.test_samples = 500;
  o.seed = 12;
  const int before = worker_count();
  set_worker_count(1);
  const PdeTrainResult one = train_pde(torus_problem(3), o);
  set_worker_count(3);
  const PdeTrainResult three = train_pde(torus_problem(3), o);
  set_worker_count(before);
  CHECK(one.model.parameters() == three.model.parameters());
  REQUIRE(one.metrics.size() == three.metrics.size());
  for (std::size_t i = 0; i < one.metrics.size(); ++i) {
    CHECK(one.metrics[i].e0 == three.metrics[i].e0);
    const double a = one.metrics[i].bracket_mean, b = three.metrics[i].bracket_mean;
    CHECK((a == b || (std::isnan(a) && std::isnan(b))));
  }
  CHECK(std::abs(one.removed_mean) > 0.0);
}

TEST_CASE("the torus model is mean-free after training")
{
  PdeTrainOptions o;
  o.width = 8;
  o.trig_level = 1;
  o.batch_size = 500;
  o.aux_batch_size = 4000;
  o.iterations = 3;
  o.test_samples = 200;
  o.seed = 2;
  const PdeTrainResult r = train_pde(torus_problem(2), o);
  const DensitySampler uniform(Domain{DomainKind::torus, 2}, DensitySpec{});
  const auto pts = sample_points(uniform, 4000, 2, Purpose::mean_shift);
  CHECK(std::abs(evaluate_batch(r.model, pts).mean()) <= 1e-10);
}
