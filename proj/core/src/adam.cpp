#include "selrcn/adam.hpp"

#include <cmath>
#include <string>

#include "selrcn/errors.hpp"

namespace selrcn {

AdamState AdamState::for_params(std::span<const Tensor> params, AdamHyperparams hyper) {
  AdamState state;
  state.hyper = hyper;
  for (const Tensor& p : params) {
    state.first_moment.emplace_back(p.shape(), 0.0);
    state.second_moment.emplace_back(p.shape(), 0.0);
  }
  return state;
}

void adam_step(std::span<Tensor> params, AdamState& state, Precision precision) {
  if (state.first_moment.empty() && state.second_moment.empty()) {
    state = AdamState::for_params(params, state.hyper);
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw DimensionError("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].shape() != params[i].shape() || state.second_moment[i].shape() != params[i].shape()) {
      throw DimensionError("adam_step: moment shape " + shape_string(state.first_moment[i].shape()) +
                           " does not match parameter " + shape_string(params[i].shape()));
    }
  }

  const AdamHyperparams& h = state.hyper;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(h.beta1, t);
  const double bias2 = 1.0 - std::pow(h.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    auto values = p.mutable_data();
    auto grad = p.grad();
    auto m = state.first_moment[i].mutable_data();
    auto v = state.second_moment[i].mutable_data();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad.empty() ? 0.0 : grad[j];
      m[j] = round_to(precision, h.beta1 * m[j] + (1.0 - h.beta1) * g);
      v[j] = round_to(precision, h.beta2 * v[j] + (1.0 - h.beta2) * g * g);
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      values[j] = round_to(precision, values[j] - h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon));
    }
  }
}

}  // namespace selrcn
