#include "cemb/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cemb/errors.hpp"

namespace cemb {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::relu:
      return "relu";
  }
  return "unknown";
}

void AffineLayer::validate() const {
  if (bias.size() != weights.rows()) {
    throw ShapeError("layer bias width " + std::to_string(bias.size()) +
                     " does not match weight rows " + std::to_string(weights.rows()));
  }
  if (!weights.all_finite() || !all_finite(bias)) {
    throw NumericError("layer holds non-finite parameters");
  }
}

DenseNetwork::DenseNetwork(std::vector<Layer> layers, std::size_t bottleneck_index)
    : layers_(std::move(layers)), bottleneck_index_(bottleneck_index) {
  if (layers_.empty()) {
    if (bottleneck_index_ != 0) throw ShapeError("empty network cannot have a bottleneck");
    return;
  }
  if (bottleneck_index_ >= layers_.size()) {
    throw ShapeError("bottleneck index " + std::to_string(bottleneck_index_) +
                     " out of range for " + std::to_string(layers_.size()) + " layers");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].affine.validate();
    if (i > 0 && layers_[i].affine.in_width() != layers_[i - 1].affine.out_width()) {
      throw ShapeError("layer " + std::to_string(i) + " expects width " +
                       std::to_string(layers_[i].affine.in_width()) + " but layer " +
                       std::to_string(i - 1) + " produces " +
                       std::to_string(layers_[i - 1].affine.out_width()));
    }
  }
}

DenseNetwork DenseNetwork::initialized(std::span<const std::size_t> widths,
                                       std::span<const Activation> activations,
                                       std::size_t bottleneck_index, Rng& rng) {
  if (widths.size() != activations.size() + 1) {
    throw ShapeError("need one more width than activations");
  }
  std::vector<Layer> layers;
  layers.reserve(activations.size());
  for (std::size_t i = 0; i < activations.size(); ++i) {
    const std::size_t in = widths[i];
    const std::size_t out = widths[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    RealMatrix w(out, in);
    for (double& v : w.data()) v = rng.uniform(-limit, limit);
    layers.push_back(Layer{AffineLayer{std::move(w), Vector(out, 0.0)}, activations[i]});
  }
  return DenseNetwork(std::move(layers), bottleneck_index);
}

std::span<const Layer> DenseNetwork::head() const {
  if (layers_.empty()) return {};
  return std::span<const Layer>(layers_).subspan(bottleneck_index_ + 1);
}

std::size_t DenseNetwork::input_width() const {
  return layers_.empty() ? 0 : layers_.front().affine.in_width();
}

std::size_t DenseNetwork::output_width() const {
  return layers_.empty() ? 0 : layers_.back().affine.out_width();
}

std::size_t DenseNetwork::latent_width() const {
  return layers_.empty() ? 0 : layers_[bottleneck_index_].affine.out_width();
}

std::size_t DenseNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.affine.weights.size() + l.affine.bias.size();
  return n;
}

ForwardCache forward(const DenseNetwork& net, std::span<const double> x) {
  if (net.layer_count() > 0 && x.size() != net.input_width()) {
    throw ShapeError("input width " + std::to_string(x.size()) + " but network expects " +
                     std::to_string(net.input_width()));
  }
  ForwardCache cache;
  cache.input.assign(x.begin(), x.end());
  cache.pre_activations.reserve(net.layer_count());
  cache.activations.reserve(net.layer_count());
  std::span<const double> current = cache.input;
  for (const auto& layer : net.layers()) {
    Vector z = affine(layer.affine.weights, layer.affine.bias, current);
    Vector a = z;
    if (layer.activation == Activation::relu) {
      for (double& v : a) v = v > 0.0 ? v : 0.0;
    }
    cache.pre_activations.push_back(std::move(z));
    cache.activations.push_back(std::move(a));
    current = cache.activations.back();
  }
  return cache;
}

const Vector& latent(const DenseNetwork& net, const ForwardCache& cache) {
  if (cache.activations.size() != net.layer_count() || net.layer_count() == 0) {
    throw StateError("forward cache does not belong to this network");
  }
  return cache.activations[net.bottleneck_index()];
}

Vector softmax(std::span<const double> scores) {
  Vector p(scores.begin(), scores.end());
  if (p.empty()) return p;
  const double top = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

Gradients Gradients::zeros_like(const DenseNetwork& net) {
  Gradients g;
  for (const auto& layer : net.layers()) {
    g.weights.emplace_back(layer.affine.weights.rows(), layer.affine.weights.cols());
    g.bias.emplace_back(layer.affine.bias.size(), 0.0);
  }
  return g;
}

void Gradients::accumulate(const Gradients& other, double s) {
  if (other.weights.size() != weights.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    auto dst = weights[i].data();
    auto src = other.weights[i].data();
    if (dst.size() != src.size() || bias[i].size() != other.bias[i].size()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(i));
    }
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += s * src[k];
    for (std::size_t k = 0; k < bias[i].size(); ++k) bias[i][k] += s * other.bias[i][k];
  }
  if (!other.input.empty()) {
    if (input.empty()) input.assign(other.input.size(), 0.0);
    for (std::size_t k = 0; k < input.size(); ++k) input[k] += s * other.input[k];
  }
}

void Gradients::scale(double s) {
  for (auto& w : weights) {
    for (double& v : w.data()) v *= s;
  }
  for (auto& b : bias) {
    for (double& v : b) v *= s;
  }
  for (double& v : input) v *= s;
}

Gradients backward(const DenseNetwork& net, const ForwardCache& cache,
                   std::span<const double> upstream) {
  if (cache.empty()) throw StateError("backward called without a forward cache");
  const std::size_t n = net.layer_count();
  if (cache.activations.size() != n || cache.pre_activations.size() != n ||
      (n > 0 && cache.input.size() != net.input_width())) {
    throw StateError("forward cache does not belong to this network");
  }
  if (upstream.size() != cache.scores().size()) {
    throw ShapeError("upstream gradient width " + std::to_string(upstream.size()) +
                     " but output width is " + std::to_string(cache.scores().size()));
  }

  Gradients g = Gradients::zeros_like(net);
  Vector delta(upstream.begin(), upstream.end());
  for (std::size_t li = n; li-- > 0;) {
    const Layer& layer = net.layer(li);
    const Vector& z = cache.pre_activations[li];
    if (layer.activation == Activation::relu) {
      for (std::size_t k = 0; k < delta.size(); ++k) {
        if (!(z[k] > 0.0)) delta[k] = 0.0;
      }
    }
    const Vector& in = li == 0 ? cache.input : cache.activations[li - 1];
    const RealMatrix& w = layer.affine.weights;
    RealMatrix& dw = g.weights[li];
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const double d = delta[r];
      g.bias[li][r] = d;
      if (d == 0.0) continue;
      auto row = dw.row(r);
      for (std::size_t c = 0; c < w.cols(); ++c) row[c] = d * in[c];
    }
    Vector next(w.cols(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const auto row = w.row(r);
      for (std::size_t c = 0; c < w.cols(); ++c) next[c] += row[c] * d;
    }
    delta = std::move(next);
  }
  g.input = std::move(delta);
  return g;
}

namespace {

double evaluate(const DenseNetwork& net, const ScoreLoss& loss, std::span<const double> x) {
  const double v = loss(forward(net, x).scores()).value;
  if (!std::isfinite(v)) throw NumericError("gradient check: loss is not finite");
  return v;
}

void record(GradientCheckReport& report, double analytic, double numeric, double tolerance,
            const std::string& name) {
  const double rel = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
  ++report.entries_checked;
  if (report.worst_entry.empty() || rel > report.worst_relative_error) {
    report.worst_relative_error = rel;
    report.worst_entry = name;
  }
  if (!(rel < tolerance)) report.passed = false;
}

}  // namespace

GradientCheckReport compare_gradients(const DenseNetwork& net, const Gradients& analytic,
                                      const ScoreLoss& loss, std::span<const double> x,
                                      double tolerance, double step) {
  GradientCheckReport report;
  const ForwardCache base = forward(net, x);
  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    if (net.layer(li).activation != Activation::relu) continue;
    for (double z : base.pre_activations[li]) {
      if (std::abs(z) < 1e-6) report.near_kink = true;
    }
  }
  if (!std::isfinite(loss(base.scores()).value)) {
    throw NumericError("gradient check: loss is not finite");
  }

  DenseNetwork probe = net;
  auto central = [&](double& slot) {
    const double saved = slot;
    slot = saved + step;
    const double up = evaluate(probe, loss, x);
    slot = saved - step;
    const double down = evaluate(probe, loss, x);
    slot = saved;
    return (up - down) / (2.0 * step);
  };

  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    auto& layer = probe.layer(li).affine;
    for (std::size_t r = 0; r < layer.weights.rows(); ++r) {
      for (std::size_t c = 0; c < layer.weights.cols(); ++c) {
        const double fd = central(layer.weights(r, c));
        record(report, analytic.weights.at(li)(r, c), fd, tolerance,
               "W" + std::to_string(li) + "[" + std::to_string(r) + "," + std::to_string(c) + "]");
      }
      const double fd = central(layer.bias[r]);
      record(report, analytic.bias.at(li)[r], fd, tolerance,
             "b" + std::to_string(li) + "[" + std::to_string(r) + "]");
    }
  }

  if (!analytic.input.empty() && net.layer_count() > 0) {
    Vector xp(x.begin(), x.end());
    for (std::size_t k = 0; k < xp.size(); ++k) {
      const double saved = xp[k];
      xp[k] = saved + step;
      const double up = evaluate(net, loss, xp);
      xp[k] = saved - step;
      const double down = evaluate(net, loss, xp);
      xp[k] = saved;
      record(report, analytic.input[k], (up - down) / (2.0 * step), tolerance,
             "x[" + std::to_string(k) + "]");
    }
  }
  return report;
}

GradientCheckReport gradient_check(const DenseNetwork& net, const ScoreLoss& loss,
                                   std::span<const double> x, double tolerance, double step) {
  const ForwardCache cache = forward(net, x);
  const LossValue lv = loss(cache.scores());
  if (!std::isfinite(lv.value)) throw NumericError("gradient check: loss is not finite");
  const Gradients analytic = backward(net, cache, lv.grad);
  return compare_gradients(net, analytic, loss, x, tolerance, step);
}

}  // namespace cemb
