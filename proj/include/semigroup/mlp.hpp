#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace semigroup {

/// Per-coordinate (sin 2 pi k x_i, cos 2 pi k x_i), i = 1..d, k = 1..m, in
/// that order. Coordinates are reduced to [0, 1) first, so the map is
/// 1-periodic. out.size() must be 2 m d.
void trig_features(std::span<const double> x, int level, std::span<double> out);

/// Fully connected ReLU network u(x) with three hidden layers of equal
/// width, an optional trigonometric feature layer and a scalar head.
///
/// All parameters live in one flat vector, in this order:
///   W1 (H x d_in, column-major), b1 (H), W2 (H x H), b2, W3 (H x H), b3,
///   w4 (H), b4 (1), shift (1)
/// with d_in = d when the feature level m is 0 and 2 m d otherwise. The
/// trailing `shift` is an additive output constant used for mean removal.
class MlpModel
{
public:
  MlpModel() = default;
  /// Zero-initialized model.
  MlpModel(int dim, int width, int trig_level);

  /// He-uniform weights, small uniform biases, zero shift; seeded. `gain`
  /// scales every weight and bias bound.
  static MlpModel initialized(int dim, int width, int trig_level, std::uint64_t seed,
                              double gain = 1.0);

  static std::size_t parameter_count(int dim, int width, int trig_level);

  int dim() const { return dim_; }
  int width() const { return width_; }
  int trig_level() const { return trig_level_; }
  int input_width() const { return trig_level_ == 0 ? dim_ : 2 * trig_level_ * dim_; }
  std::size_t size() const { return static_cast<std::size_t>(theta_.size()); }

  Eigen::VectorXd& parameters() { return theta_; }
  const Eigen::VectorXd& parameters() const { return theta_; }

  double output_shift() const { return theta_[shift_index()]; }
  void set_output_shift(double s) { theta_[shift_index()] = s; }
  std::size_t shift_index() const { return size() - 1; }
  std::size_t head_bias_index() const { return size() - 2; }

  struct Offsets
  {
    std::size_t w1, b1, w2, b2, w3, b3, w4, b4, shift;
  };
  Offsets offsets() const;

private:
  int dim_ = 0;
  int width_ = 0;
  int trig_level_ = 0;
  Eigen::VectorXd theta_;
};

/// Activations kept by a batched forward pass for the backward pass.
/// Reused across calls to avoid reallocation.
struct ForwardCache
{
  Eigen::MatrixXd input;
  Eigen::MatrixXd a1, a2, a3;
  Eigen::MatrixXd d_scratch, d_next;
};

/// Evaluates u at every column of `points` (d x n). When `cache` is
/// non-null the activations are stored for accumulate_gradient.
void forward_batch(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points,
                   Eigen::Ref<Eigen::VectorXd> out, ForwardCache* cache = nullptr);

/// grad += sum_k seeds[k] * d u(x_k) / d theta, for the batch held by `cache`.
void accumulate_gradient(const MlpModel& model, ForwardCache& cache,
                         const Eigen::Ref<const Eigen::VectorXd>& seeds,
                         Eigen::Ref<Eigen::VectorXd> grad);

double forward(const MlpModel& model, std::span<const double> x);

struct ValueAndGrad
{
  double value = 0.0;
  Eigen::VectorXd grad;
};

/// u(x) and its parameter gradient by reverse accumulation. The ReLU
/// derivative at 0 is taken as 0.
ValueAndGrad value_and_grad(const MlpModel& model, std::span<const double> x);

/// Lowers output_shift by the mean of u over the columns of `points`.
/// Returns the subtracted mean.
double shift_by_mean(MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points);

} // namespace semigroup
