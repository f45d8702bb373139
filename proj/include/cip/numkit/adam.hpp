#pragma once

#include <cstdint>

#include "cip/numkit/error.hpp"
#include "cip/numkit/mlp.hpp"

namespace cip {

struct AdamState {
  MlpParams first_moment;
  MlpParams second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const MlpParams& params);
};

/// One bias-corrected Adam update in place. A non-finite gradient leaves both
/// `params` and `state` untouched, records an "adam_rejected" event and
/// returns false.
bool adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr,
               Diagnostics* diagnostics = nullptr);

}  // namespace cip
