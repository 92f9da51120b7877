#include "cemb/optimizer.hpp"

#include <cmath>

#include "cemb/errors.hpp"

namespace cemb {

Adam::Adam(const DenseNetwork& net, AdamSettings settings)
    : settings_(settings),
      first_(Gradients::zeros_like(net)),
      second_(Gradients::zeros_like(net)) {}

void Adam::step(DenseNetwork& net, const Gradients& grad, double lr) {
  if (grad.weights.size() != net.layer_count() || first_.weights.size() != net.layer_count()) {
    throw ShapeError("optimizer state does not match the network");
  }
  ++steps_;
  const double b1 = settings_.beta1;
  const double b2 = settings_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));

  auto update = [&](std::span<double> param, std::span<const double> g, std::span<double> m,
                    std::span<double> v) {
    for (std::size_t k = 0; k < param.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      if (lr == 0.0) continue;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      param[k] -= lr * m_hat / (std::sqrt(v_hat) + settings_.epsilon);
    }
  };

  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    auto& layer = net.layer(i).affine;
    update(layer.weights.data(), grad.weights[i].data(), first_.weights[i].data(),
           second_.weights[i].data());
    update(layer.bias, grad.bias[i], first_.bias[i], second_.bias[i]);
  }
}

}  // namespace cemb
