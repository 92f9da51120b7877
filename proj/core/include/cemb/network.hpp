#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cemb/matrix.hpp"
#include "cemb/random.hpp"

namespace cemb {

enum class Activation : std::uint8_t { identity = 0, relu = 1 };

const char* to_string(Activation a);

/// y = W x + b with W stored out x in.
struct AffineLayer {
  RealMatrix weights;
  Vector bias;

  std::size_t in_width() const { return weights.cols(); }
  std::size_t out_width() const { return weights.rows(); }
  /// Throws ShapeError / NumericError if the layer is inconsistent.
  void validate() const;

  friend bool operator==(const AffineLayer&, const AffineLayer&) = default;
};

struct Layer {
  AffineLayer affine;
  Activation activation = Activation::identity;

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Stack of dense layers.
///
/// The output of layer `bottleneck_index()` is the latent mean; the layers
/// after it form the classifier head. Networks that are themselves heads
/// (the uncertainty network, a stand-alone classifier) put the bottleneck on
/// their last layer. An empty network is the identity map and has no
/// parameters.
class DenseNetwork {
 public:
  DenseNetwork() = default;
  /// Validates widths, finiteness, and bottleneck_index < layers.size().
  DenseNetwork(std::vector<Layer> layers, std::size_t bottleneck_index);

  /// Uniform(+-sqrt(6 / (in + out))) weights and zero biases.
  /// `widths` has one more entry than `activations`.
  static DenseNetwork initialized(std::span<const std::size_t> widths,
                                  std::span<const Activation> activations,
                                  std::size_t bottleneck_index, Rng& rng);

  std::size_t layer_count() const { return layers_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  Layer& layer(std::size_t i) { return layers_.at(i); }

  std::size_t bottleneck_index() const { return bottleneck_index_; }
  /// Layers after the bottleneck.
  std::span<const Layer> head() const;

  std::size_t input_width() const;
  std::size_t output_width() const;
  std::size_t latent_width() const;
  std::size_t parameter_count() const;

  friend bool operator==(const DenseNetwork&, const DenseNetwork&) = default;

 private:
  std::vector<Layer> layers_;
  std::size_t bottleneck_index_ = 0;
};

/// Everything backward() needs: the input and per-layer pre/post activations.
struct ForwardCache {
  Vector input;
  std::vector<Vector> pre_activations;
  std::vector<Vector> activations;

  bool empty() const { return activations.empty() && input.empty(); }
  /// Final pre-softmax scores (the input itself for an empty network).
  const Vector& scores() const { return activations.empty() ? input : activations.back(); }
};

/// Runs every layer. Throws ShapeError if x does not match the input width.
ForwardCache forward(const DenseNetwork& net, std::span<const double> x);

/// Output of the bottleneck layer for a cached pass.
const Vector& latent(const DenseNetwork& net, const ForwardCache& cache);

/// Numerically stable softmax (max subtracted before exponentiation).
Vector softmax(std::span<const double> scores);

/// Parameter-shaped gradient buffers.
struct Gradients {
  std::vector<RealMatrix> weights;
  std::vector<Vector> bias;
  Vector input;

  /// Zero gradients shaped like `net` (input gradient left empty).
  static Gradients zeros_like(const DenseNetwork& net);
  /// this += scale * other; shapes must match.
  void accumulate(const Gradients& other, double scale = 1.0);
  void scale(double s);
};

/// Reverse-mode pass for the scalar whose gradient w.r.t. the final scores
/// is `upstream`. Throws StateError if `cache` is empty or was not produced
/// by `net`.
Gradients backward(const DenseNetwork& net, const ForwardCache& cache,
                   std::span<const double> upstream);

/// Scalar loss of the network output, with its gradient w.r.t. the output.
struct LossValue {
  double value = 0.0;
  Vector grad;
};
using ScoreLoss = std::function<LossValue(std::span<const double> scores)>;

struct GradientCheckReport {
  bool passed = true;
  double worst_relative_error = 0.0;
  std::size_t entries_checked = 0;
  std::string worst_entry;
  /// Some relu pre-activation lies within 1e-6 of zero; finite differences
  /// straddle the kink there and the probe should be resampled.
  bool near_kink = false;
};

/// Analytic gradient (via backward) against central differences for every
/// weight, bias and input entry. Relative error is
/// |analytic - fd| / max(1, |fd|). Throws NumericError on a non-finite loss.
GradientCheckReport gradient_check(const DenseNetwork& net, const ScoreLoss& loss,
                                   std::span<const double> x, double tolerance,
                                   double step = 1e-5);

/// Same comparison for caller-supplied analytic gradients.
GradientCheckReport compare_gradients(const DenseNetwork& net, const Gradients& analytic,
                                      const ScoreLoss& loss, std::span<const double> x,
                                      double tolerance, double step = 1e-5);

}  // namespace cemb
