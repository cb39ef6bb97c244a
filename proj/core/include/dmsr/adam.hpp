#pragma once

#include <vector>

#include "dmsr/layers.hpp"

namespace dmsr::nn {

/// Adam with bias correction. State is positional: the params vector passed
/// to step() must keep the same order across calls.
class Adam {
 public:
  explicit Adam(float lr = 1e-4f, float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Applies one update from the accumulated gradients, then zeroes them.
  // A non-finite gradient aborts the step (parameters untouched) with a
  // StateError naming the offending parameter.
  void step(const std::vector<Parameter*>& params);

  long step_count() const { return step_count_; }
  float lr() const { return lr_; }

 private:
  float lr_, beta1_, beta2_, eps_;
  long step_count_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace dmsr::nn
