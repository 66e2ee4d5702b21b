#include "semigroup/mlp.hpp"

#include "semigroup/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace semigroup {

void trig_features(std::span<const double> x, int level, std::span<double> out)
{
  if (level < 1)
    throw std::invalid_argument("trig_features: level must be at least 1");
  if (out.size() != 2 * static_cast<std::size_t>(level) * x.size())
    throw std::invalid_argument("trig_features: output size must be 2 m d");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::size_t j = 0;
  for (double xi : x) {
    const double t = xi - std::floor(xi);
    for (int k = 1; k <= level; ++k) {
      const double angle = two_pi * k * t;
      out[j++] = std::sin(angle);
      out[j++] = std::cos(angle);
    }
  }
}

MlpModel::MlpModel(int dim, int width, int trig_level)
    : dim_(dim), width_(width), trig_level_(trig_level)
{
  if (dim < 1 || width < 1 || trig_level < 0)
    throw std::invalid_argument("MlpModel: dimension and width must be positive, level >= 0");
  theta_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count(dim, width, trig_level)));
}

std::size_t MlpModel::parameter_count(int dim, int width, int trig_level)
{
  const std::size_t h = width;
  const std::size_t d_in = trig_level == 0 ? dim : 2 * trig_level * dim;
  return d_in * h + h + 2 * (h * h + h) + h + 1 + 1;
}

MlpModel::Offsets MlpModel::offsets() const
{
  const std::size_t h = width_;
  const std::size_t d_in = input_width();
  Offsets o{};
  o.w1 = 0;
  o.b1 = o.w1 + h * d_in;
  o.w2 = o.b1 + h;
  o.b2 = o.w2 + h * h;
  o.w3 = o.b2 + h;
  o.b3 = o.w3 + h * h;
  o.w4 = o.b3 + h;
  o.b4 = o.w4 + h;
  o.shift = o.b4 + 1;
  return o;
}

MlpModel MlpModel::initialized(int dim, int width, int trig_level, std::uint64_t seed,
                               double gain)
{
  if (!(gain > 0.0) || !std::isfinite(gain))
    throw std::invalid_argument("MlpModel: initialization gain must be positive");
  MlpModel model(dim, width, trig_level);
  RngStream rng(seed, stream_id(Purpose::init, 0, 0));
  const auto o = model.offsets();
  auto& theta = model.theta_;
  auto fill = [&](std::size_t begin, std::size_t count, double bound) {
    for (std::size_t i = 0; i < count; ++i)
      theta[static_cast<Eigen::Index>(begin + i)] = gain * bound * (2.0 * rng.uniform() - 1.0);
  };
  const std::size_t h = width;
  const std::size_t d_in = model.input_width();
  const double in_w = std::sqrt(6.0 / d_in), in_b = 1.0 / std::sqrt(double(d_in));
  const double hid_w = std::sqrt(6.0 / h), hid_b = 1.0 / std::sqrt(double(h));
  fill(o.w1, h * d_in, in_w);
  fill(o.b1, h, in_b);
  fill(o.w2, h * h, hid_w);
  fill(o.b2, h, hid_b);
  fill(o.w3, h * h, hid_w);
  fill(o.b3, h, hid_b);
  fill(o.w4, h, hid_w);
  fill(o.b4, 1, hid_b);
  return model;
}

namespace {

using MatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;
using MutMatMap = Eigen::Map<Eigen::MatrixXd>;
using MutVecMap = Eigen::Map<Eigen::VectorXd>;

void build_input(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points,
                 Eigen::MatrixXd& input)
{
  const Eigen::Index n = points.cols();
  if (points.rows() != model.dim())
    throw std::invalid_argument("MlpModel: input dimension mismatch");
  if (model.trig_level() == 0) {
    input = points;
    return;
  }
  input.resize(model.input_width(), n);
  const std::size_t d = model.dim();
  for (Eigen::Index k = 0; k < n; ++k) {
    trig_features(std::span<const double>(points.col(k).data(), d), model.trig_level(),
                  std::span<double>(input.col(k).data(), static_cast<std::size_t>(input.rows())));
  }
}

// Zeroes delta entries whose unit is inactive (ReLU derivative 0 at 0).
void mask_inactive(Eigen::MatrixXd& delta, const Eigen::MatrixXd& activation)
{
  double* d = delta.data();
  const double* a = activation.data();
  const Eigen::Index size = delta.size();
  for (Eigen::Index i = 0; i < size; ++i)
    d[i] = a[i] > 0.0 ? d[i] : 0.0;
}

// grad += delta * activation^T, in column blocks: Eigen's kernel is
// markedly slower on one long inner dimension for narrow layers.
void add_outer(Eigen::Map<Eigen::MatrixXd>& grad, const Eigen::MatrixXd& delta,
               const Eigen::MatrixXd& activation)
{
  constexpr Eigen::Index block = 256;
  const Eigen::Index n = delta.cols();
  for (Eigen::Index b = 0; b < n; b += block) {
    const Eigen::Index len = std::min(block, n - b);
    grad.noalias() += delta.middleCols(b, len) * activation.middleCols(b, len).transpose();
  }
}

} // namespace

void forward_batch(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points,
                   Eigen::Ref<Eigen::VectorXd> out, ForwardCache* cache)
{
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  build_input(model, points, c.input);
  if (out.size() != points.cols())
    throw std::invalid_argument("forward_batch: output size mismatch");

  const auto o = model.offsets();
  const Eigen::Index h = model.width();
  const Eigen::Index d_in = model.input_width();
  const double* p = model.parameters().data();
  const MatMap w1(p + o.w1, h, d_in), w2(p + o.w2, h, h), w3(p + o.w3, h, h);
  const VecMap b1(p + o.b1, h), b2(p + o.b2, h), b3(p + o.b3, h), w4(p + o.w4, h);

  c.a1.noalias() = w1 * c.input;
  c.a1.colwise() += b1;
  c.a1 = c.a1.cwiseMax(0.0);
  c.a2.noalias() = w2 * c.a1;
  c.a2.colwise() += b2;
  c.a2 = c.a2.cwiseMax(0.0);
  c.a3.noalias() = w3 * c.a2;
  c.a3.colwise() += b3;
  c.a3 = c.a3.cwiseMax(0.0);
  out.noalias() = c.a3.transpose() * w4;
  out.array() += p[o.b4] + p[o.shift];
}

void accumulate_gradient(const MlpModel& model, ForwardCache& c,
                         const Eigen::Ref<const Eigen::VectorXd>& seeds,
                         Eigen::Ref<Eigen::VectorXd> grad)
{
  const Eigen::Index n = c.a3.cols();
  if (seeds.size() != n)
    throw std::invalid_argument("accumulate_gradient: seed count mismatch");
  if (grad.size() != static_cast<Eigen::Index>(model.size()))
    throw std::invalid_argument("accumulate_gradient: gradient size mismatch");

  const auto o = model.offsets();
  const Eigen::Index h = model.width();
  const Eigen::Index d_in = model.input_width();
  const double* p = model.parameters().data();
  const MatMap w2(p + o.w2, h, h), w3(p + o.w3, h, h);
  const VecMap w4(p + o.w4, h);

  double* g = grad.data();
  MutMatMap gw1(g + o.w1, h, d_in), gw2(g + o.w2, h, h), gw3(g + o.w3, h, h);
  MutVecMap gb1(g + o.b1, h), gb2(g + o.b2, h), gb3(g + o.b3, h), gw4(g + o.w4, h);

  const double seed_sum = seeds.sum();
  g[o.b4] += seed_sum;
  g[o.shift] += seed_sum;
  gw4.noalias() += c.a3 * seeds;

  // delta of layer 3 pre-activations
  c.d_next.noalias() = w4 * seeds.transpose();
  mask_inactive(c.d_next, c.a3);
  gb3 += c.d_next.rowwise().sum();
  add_outer(gw3, c.d_next, c.a2);

  c.d_scratch.noalias() = w3.transpose() * c.d_next;
  mask_inactive(c.d_scratch, c.a2);
  gb2 += c.d_scratch.rowwise().sum();
  add_outer(gw2, c.d_scratch, c.a1);

  c.d_next.noalias() = w2.transpose() * c.d_scratch;
  mask_inactive(c.d_next, c.a1);
  gb1 += c.d_next.rowwise().sum();
  add_outer(gw1, c.d_next, c.input);
}

double forward(const MlpModel& model, std::span<const double> x)
{
  if (static_cast<int>(x.size()) != model.dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  const Eigen::Map<const Eigen::MatrixXd> pt(x.data(), model.dim(), 1);
  Eigen::VectorXd out(1);
  forward_batch(model, pt, out);
  return out[0];
}

ValueAndGrad value_and_grad(const MlpModel& model, std::span<const double> x)
{
  if (static_cast<int>(x.size()) != model.dim())
    throw std::invalid_argument("value_and_grad: input dimension mismatch");
  const Eigen::Map<const Eigen::MatrixXd> pt(x.data(), model.dim(), 1);
  ForwardCache cache;
  Eigen::VectorXd out(1);
  forward_batch(model, pt, out, &cache);
  ValueAndGrad r;
  r.value = out[0];
  r.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.size()));
  const Eigen::VectorXd seed = Eigen::VectorXd::Ones(1);
  accumulate_gradient(model, cache, seed, r.grad);
  return r;
}

double shift_by_mean(MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points)
{
  const Eigen::Index n = points.cols();
  if (n < 1)
    throw std::invalid_argument("shift_by_mean: empty batch");
  constexpr Eigen::Index chunk = 4096;
  ForwardCache cache;
  Eigen::VectorXd out;
  double sum = 0.0;
  for (Eigen::Index begin = 0; begin < n; begin += chunk) {
    const Eigen::Index len = std::min(chunk, n - begin);
    out.resize(len);
    forward_batch(model, points.middleCols(begin, len), out, &cache);
    sum += out.sum();
  }
  const double mean = sum / static_cast<double>(n);
  model.set_output_shift(model.output_shift() - mean);
  return mean;
}

} // namespace semigroup
