#pragma once

#include <cstdint>

#include "eotk/models/tensor.hpp"

namespace eotk {

/// Adam with bias correction and no weight decay.
class Adam {
 public:
  explicit Adam(const ParameterSet& params, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);

  /// One update of `params` from `grads` (same layout). Throws ShapeMismatch.
  void step(ParameterSet& params, const ParameterSet& grads);

  std::uint64_t steps() const noexcept { return t_; }
  double learning_rate() const noexcept { return lr_; }

 private:
  double lr_, beta1_, beta2_, epsilon_;
  std::uint64_t t_ = 0;
  ParameterSet m_;
  ParameterSet v_;
};

}  // namespace eotk
