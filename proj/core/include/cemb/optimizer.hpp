#pragma once

#include <cstddef>

#include "cemb/network.hpp"

namespace cemb {

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments, one state slot per network parameter.
class Adam {
 public:
  explicit Adam(const DenseNetwork& net, AdamSettings settings = {});

  /// theta -= lr * m_hat / (sqrt(v_hat) + eps). With lr == 0 the parameters
  /// are left untouched (the moments still advance).
  void step(DenseNetwork& net, const Gradients& grad, double lr);
  std::size_t steps() const { return steps_; }

 private:
  AdamSettings settings_;
  Gradients first_;
  Gradients second_;
  std::size_t steps_ = 0;
};

}  // namespace cemb
