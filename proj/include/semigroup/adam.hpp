#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace semigroup {

/// Adam moments with the usual defaults (beta1 0.9, beta2 0.999, eps 1e-8).
struct AdamState
{
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(Eigen::Index size)
      : first_moment(Eigen::VectorXd::Zero(size)), second_moment(Eigen::VectorXd::Zero(size))
  {
  }
};

/// One bias-corrected Adam update of `params` in place.
/// Throws std::invalid_argument for a nonpositive rate or shape mismatch.
void adam_step(Eigen::Ref<Eigen::VectorXd> params, AdamState& state,
               const Eigen::Ref<const Eigen::VectorXd>& grad, double learning_rate);

} // namespace semigroup
