#include "cip/numkit/adam.hpp"

#include <cmath>

namespace cip {

AdamState AdamState::for_params(const MlpParams& params) {
  AdamState state;
  state.first_moment = MlpParams::zeros_like(params);
  state.second_moment = MlpParams::zeros_like(params);
  return state;
}

bool adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr,
               Diagnostics* diagnostics) {
  if (!(lr > 0.0)) throw ConfigError("adam_step: learning rate must be positive", "lr");
  require_same_shape(params, grads, "adam_step");
  require_same_shape(params, state.first_moment, "adam_step");
  if (!grads.all_finite()) {
    if (diagnostics) diagnostics->record("adam_rejected", "non-finite gradient");
    return false;
  }

  state.step += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double eps = state.epsilon;

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    update(params.layers[k].weight, grads.layers[k].weight, state.first_moment.layers[k].weight,
           state.second_moment.layers[k].weight);
    update(params.layers[k].bias, grads.layers[k].bias, state.first_moment.layers[k].bias,
           state.second_moment.layers[k].bias);
  }
  return true;
}

}  // namespace cip
