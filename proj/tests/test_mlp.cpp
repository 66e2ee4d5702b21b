#include "semigroup/adam.hpp"
#include "semigroup/mlp.hpp"
#include "semigroup/random.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace semigroup;

namespace {

// Straightforward evaluation from the documented flat layout, used as an
// oracle for the production forward pass.
double oracle_forward(const MlpModel& m, const std::vector<double>& x)
{
  const int d = m.dim(), h = m.width(), lvl = m.trig_level();
  std::vector<double> in;
  if (lvl == 0)
    in = x;
  else
    for (int i = 0; i < d; ++i)
      for (int k = 1; k <= lvl; ++k) {
        in.push_back(std::sin(2 * std::numbers::pi * k * x[i]));
        in.push_back(std::cos(2 * std::numbers::pi * k * x[i]));
      }
  const auto& t = m.parameters();
  std::size_t pos = 0;
  auto layer = [&](const std::vector<double>& a) {
    const std::size_t n_in = a.size();
    std::vector<double> z(h, 0.0);
    for (std::size_t j = 0; j < n_in; ++j)
      for (int i = 0; i < h; ++i)
        z[i] += t[pos + j * h + i] * a[j];
    pos += n_in * h;
    for (int i = 0; i < h; ++i)
      z[i] = std::max(0.0, z[i] + t[pos + i]);
    pos += h;
    return z;
  };
  auto a = layer(layer(layer(in)));
  double out = 0.0;
  for (int i = 0; i < h; ++i)
    out += t[pos + i] * a[i];
  return out + t[pos + h] + t[pos + h + 1];
}

std::vector<double> random_point(int d, std::uint64_t k)
{
  RngStream s(99, stream_id(Purpose::user, 1, k));
  std::vector<double> x(d);
  for (double& v : x)
    v = 2.0 * s.uniform() - 1.0;
  return x;
}

} // namespace

TEST_CASE("parameter count follows the layer shapes")
{
  for (int d : {1, 3, 10})
    for (int h : {1, 12, 120})
      for (int m : {0, 1, 5}) {
        const std::size_t din = m == 0 ? d : 2 * m * d;
        const std::size_t expected = din * h + h + 2 * (h * h + h) + h + 1 + 1;
        CHECK(MlpModel::parameter_count(d, h, m) == expected);
        CHECK(MlpModel(d, h, m).size() == expected);
      }
}

TEST_CASE("trig features match the closed form and are periodic")
{
  std::vector<double> out(2);
  trig_features(std::vector<double>{0.25}, 1, out);
  CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(out[1]) < 1e-15);

  std::vector<double> out8(8);
  trig_features(std::vector<double>{0.0, 0.0}, 2, out8);
  CHECK(out8 == std::vector<double>{0, 1, 0, 1, 0, 1, 0, 1});

  const auto model = MlpModel::initialized(3, 16, 2, 5);
  const std::vector<double> x{0.1, 0.7, 0.35};
  for (int i = 0; i < 3; ++i)
    for (double shift : {1.0, -1.0, 3.0}) {
      auto y = x;
      y[i] += shift;
      CHECK(forward(model, y) == doctest::Approx(forward(model, x)).epsilon(1e-12));
    }
}

TEST_CASE("zero and constant models")
{
  MlpModel m(4, 8, 0);
  const std::vector<double> x{0.3, -0.2, 0.9, 0.0};
  CHECK(forward(m, x) == 0.0);
  m.parameters()[m.head_bias_index()] = 1.5;
  m.set_output_shift(-0.25);
  CHECK(forward(m, x) == 1.25);

  const ValueAndGrad vg = value_and_grad(m, x);
  CHECK(vg.value == 1.25);
  CHECK(vg.grad[m.head_bias_index()] == 1.0);
  CHECK(vg.grad[m.shift_index()] == 1.0);
  CHECK(vg.grad.head(m.head_bias_index()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward matches an independent evaluation")
{
  for (int m : {0, 2}) {
    auto model = MlpModel::initialized(3, 20, m, 17);
    model.set_output_shift(0.3);
    for (std::uint64_t k = 0; k < 20; ++k) {
      const auto x = random_point(3, k);
      CHECK(forward(model, x) == doctest::Approx(oracle_forward(model, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("parameter gradient matches central differences")
{
  const double h = 1e-5;
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const int m = trial % 2 == 0 ? 0 : 1;
    auto model = MlpModel::initialized(3, 10, m, 100 + trial);
    const auto x = random_point(3, trial);
    const ValueAndGrad vg = value_and_grad(model, x);
    CHECK(vg.value == doctest::Approx(forward(model, x)).epsilon(1e-14));
    for (Eigen::Index j = 0; j < vg.grad.size(); ++j) {
      const double keep = model.parameters()[j];
      model.parameters()[j] = keep + h;
      const double up = forward(model, x);
      model.parameters()[j] = keep - h;
      const double down = forward(model, x);
      model.parameters()[j] = keep;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(vg.grad[j] - fd) / std::max(std::abs(fd), 1e-3));
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("batched forward and gradient agree with the single-point path")
{
  const auto model = MlpModel::initialized(4, 24, 0, 3);
  const int n = 37;
  Eigen::MatrixXd pts(4, n);
  for (int k = 0; k < n; ++k) {
    const auto x = random_point(4, 200 + k);
    for (int i = 0; i < 4; ++i)
      pts(i, k) = x[i];
  }
  Eigen::VectorXd u(n), seeds(n);
  ForwardCache cache;
  forward_batch(model, pts, u, &cache);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.size());
  for (int k = 0; k < n; ++k)
    seeds[k] = 0.1 * k - 1.0;
  accumulate_gradient(model, cache, seeds, grad);

  Eigen::VectorXd expected = Eigen::VectorXd::Zero(model.size());
  for (int k = 0; k < n; ++k) {
    const std::vector<double> x(pts.col(k).data(), pts.col(k).data() + 4);
    const ValueAndGrad vg = value_and_grad(model, x);
    CHECK(u[k] == doctest::Approx(vg.value).epsilon(1e-13));
    expected += seeds[k] * vg.grad;
  }
  CHECK((grad - expected).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + expected.cwiseAbs().maxCoeff()));
}

TEST_CASE("initialization gain scales every parameter")
{
  const auto base = MlpModel::initialized(3, 7, 1, 21);
  const auto half = MlpModel::initialized(3, 7, 1, 21, 0.5);
  CHECK((half.parameters() - 0.5 * base.parameters()).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK_THROWS_AS(MlpModel::initialized(3, 7, 1, 21, 0.0), std::invalid_argument);
}

TEST_CASE("forward rejects a dimension mismatch")
{
  const MlpModel model(3, 4, 0);
  CHECK_THROWS_AS(forward(model, std::vector<double>{0.1, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(value_and_grad(model, std::vector<double>{0.1, 0.2, 0.3, 0.4}),
                  std::invalid_argument);
}

TEST_CASE("shift_by_mean centers the batch and is idempotent")
{
  auto model = MlpModel::initialized(2, 16, 1, 8);
  Eigen::MatrixXd pts(2, 5000);
  RngStream s(4, stream_id(Purpose::user, 2, 0));
  for (Eigen::Index k = 0; k < pts.cols(); ++k)
    for (int i = 0; i < 2; ++i)
      pts(i, k) = s.uniform();
  const double removed = shift_by_mean(model, pts);
  CHECK(model.output_shift() == -removed);
  Eigen::VectorXd u(pts.cols());
  forward_batch(model, pts, u);
  CHECK(std::abs(u.mean()) <= 1e-10);
  CHECK(std::abs(shift_by_mean(model, pts)) <= 1e-10);

  MlpModel constant(2, 4, 0);
  constant.parameters()[constant.head_bias_index()] = 2.5;
  shift_by_mean(constant, pts);
  CHECK(constant.output_shift() == -2.5);
  CHECK(forward(constant, std::vector<double>{0.3, 0.4}) == 0.0);
  CHECK_THROWS_AS(shift_by_mean(constant, Eigen::MatrixXd(2, 0)), std::invalid_argument);
}

TEST_CASE("adam first step has magnitude close to the learning rate")
{
  Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
  AdamState st(3);
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(3, 2.0);
  adam_step(p, st, g, 1e-3);
  CHECK(st.step == 1);
  for (Eigen::Index i = 0; i < 3; ++i)
    CHECK(p[i] == doctest::Approx(-1e-3 * 2.0 / (2.0 + 1e-8)).epsilon(1e-14));

  Eigen::VectorXd q = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0);
  const Eigen::VectorXd q0 = q;
  AdamState zs(4);
  for (int i = 0; i < 50; ++i)
    adam_step(q, zs, Eigen::VectorXd::Zero(4), 1e-2);
  CHECK(q == q0);

  Eigen::VectorXd a = q0, b = q0;
  AdamState sa(4), sb(4);
  const Eigen::VectorXd grad = Eigen::VectorXd::LinSpaced(4, 0.5, -3.0);
  for (int i = 0; i < 3; ++i) {
    adam_step(a, sa, grad, 1e-3);
    adam_step(b, sb, grad, 1e-3);
  }
  CHECK(a == b);
  CHECK_THROWS_AS(adam_step(a, sa, grad, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(adam_step(a, sa, Eigen::VectorXd::Zero(3), 1e-3), std::invalid_argument);
}
