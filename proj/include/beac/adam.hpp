#pragma once

#include <cstdint>

#include "beac/graph.hpp"

namespace beac::ad {

struct OptimizerState {
  Bindings first_moment;
  Bindings second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

OptimizerState make_adam(const Bindings& params, double learning_rate);

// One bias-corrected Adam update. Every parameter must have a gradient of the
// same shape; parameters are replaced, never mutated in place.
void adam_step(Bindings& params, const Bindings& grads, OptimizerState& state);

// Rescale grads so their global L2 norm is at most max_norm. Returns the norm
// before clipping.
double clip_global_norm(Bindings& grads, double max_norm);

}  // namespace beac::ad
