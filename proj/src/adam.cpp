#include "semigroup/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace semigroup {

void adam_step(Eigen::Ref<Eigen::VectorXd> params, AdamState& state,
               const Eigen::Ref<const Eigen::VectorXd>& grad, double learning_rate)
{
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("adam_step: learning rate must be positive");
  if (grad.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size())
    throw std::invalid_argument("adam_step: shape mismatch");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad;
  state.second_moment =
    state.beta2 * state.second_moment + (1.0 - state.beta2) * grad.cwiseAbs2();
  params.array() -= learning_rate * (state.first_moment.array() / bc1) /
                    ((state.second_moment.array() / bc2).sqrt() + state.epsilon);
}

} // namespace semigroup
