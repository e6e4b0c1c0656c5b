#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "selrcn/tensor.hpp"

namespace selrcn {

struct AdamHyperparams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment buffers for a fixed, ordered list of parameters.
struct AdamState {
  AdamHyperparams hyper;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;

  static AdamState for_params(std::span<const Tensor> params, AdamHyperparams hyper = {});
};

/// One bias-corrected Adam update over `params`, reading each parameter's
/// gradient (a missing gradient counts as zero). Moments are allocated on the
/// first call if `state` has none. Gradients are left untouched; callers zero
/// them between steps.
void adam_step(std::span<Tensor> params, AdamState& state, Precision precision = Precision::f64);

}  // namespace selrcn
