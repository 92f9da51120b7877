#include "cemb/confidence.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "cemb/errors.hpp"
#include "cemb/text.hpp"

namespace cemb {

namespace {
constexpr double kMinScoreVariance = 1e-12;
}

PooledFeature confidence_pool(const GaussianEmbedding& e) {
  const Vector var = e.variances();
  return confidence_pool(e.mu(), var);
}

PooledFeature confidence_pool(std::span<const double> mu, std::span<const double> var) {
  const std::size_t dim = mu.size();
  if (dim == 0) throw ShapeError("confidence pooling needs at least one latent dimension");
  if (var.size() != dim) {
    throw ShapeError("pooling: mu width " + std::to_string(dim) + " but variance width " +
                     std::to_string(var.size()));
  }
  if (!(*std::min_element(var.begin(), var.end()) > 0.0)) {
    throw NumericError("pooling needs strictly positive variances");
  }
  // c_n / max c = min sigma^2 / sigma_n^2.
  const double min_var = *std::min_element(var.begin(), var.end());
  PooledFeature p;
  p.q.resize(dim);
  double q_sum = 0.0;
  for (std::size_t n = 0; n < dim; ++n) {
    p.q[n] = var[n] == min_var ? 1.0 : min_var / var[n];
    q_sum += p.q[n];
  }
  p.mu_hat.resize(dim);
  p.pooled_var.resize(dim);
  for (std::size_t n = 0; n < dim; ++n) {
    const double w = p.q[n] / q_sum;
    p.mu_hat[n] = p.q[n] * mu[n] / q_sum;
    p.pooled_var[n] = w * w * var[n];
  }
  return p;
}

GaussianMoments propagate_affine(std::span<const double> mean, std::span<const double> var,
                                 const AffineLayer& layer) {
  if (mean.size() != var.size() || mean.size() != layer.in_width()) {
    throw ShapeError("propagate_affine: mean " + std::to_string(mean.size()) + ", var " +
                     std::to_string(var.size()) + ", layer input " +
                     std::to_string(layer.in_width()));
  }
  GaussianMoments out;
  out.mean = affine(layer.weights, layer.bias, mean);
  out.var.assign(layer.out_width(), 0.0);
  for (std::size_t r = 0; r < layer.out_width(); ++r) {
    const auto w = layer.weights.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * w[c] * var[c];
    out.var[r] = acc;
  }
  return out;
}

PredictionRecord make_prediction(Vector score_mean, Vector score_var,
                                 std::optional<std::size_t> true_label, std::size_t sample_id) {
  if (score_mean.size() != score_var.size() || score_mean.empty()) {
    throw ShapeError("prediction needs matching non-empty score mean and variance");
  }
  PredictionRecord r;
  r.sample_id = sample_id;
  r.predicted_class = static_cast<std::size_t>(
      std::max_element(score_mean.begin(), score_mean.end()) - score_mean.begin());
  r.confidence = 1.0 / std::max(score_var[r.predicted_class], kMinScoreVariance);
  r.score_mean = std::move(score_mean);
  r.score_var = std::move(score_var);
  r.true_label = true_label;
  return r;
}

PredictionRecord propagate_network(const PooledFeature& pooled, std::span<const Layer> head,
                                   HeadMode mode) {
  GaussianMoments m{pooled.mu_hat, pooled.pooled_var};
  bool approximate = false;
  for (std::size_t i = 0; i < head.size(); ++i) {
    const Layer& layer = head[i];
    GaussianMoments next = propagate_affine(m.mean, m.var, layer.affine);
    if (layer.activation == Activation::relu) {
      if (mode == HeadMode::strict) {
        throw UnsupportedHeadError("head layer " + std::to_string(i) +
                                   " uses relu; closed-form propagation needs affine layers");
      }
      for (double& v : next.mean) v = v > 0.0 ? v : 0.0;
      approximate = true;
    }
    m = std::move(next);
  }
  PredictionRecord r = make_prediction(std::move(m.mean), std::move(m.var));
  r.approximate = approximate;
  return r;
}

void write_predictions_csv(std::ostream& out, std::span<const PredictionRecord> records) {
  const std::size_t classes = records.empty() ? 0 : records.front().score_mean.size();
  out << "sample_id,true_label,predicted_class,confidence";
  for (std::size_t c = 0; c < classes; ++c) out << ",mean_" << c;
  for (std::size_t c = 0; c < classes; ++c) out << ",var_" << c;
  out << '\n';
  for (const auto& r : records) {
    if (r.score_mean.size() != classes) throw ShapeError("records disagree on class count");
    out << r.sample_id << ',';
    if (r.true_label) out << *r.true_label;
    out << ',' << r.predicted_class << ',' << text::format_real(r.confidence);
    for (double v : r.score_mean) out << ',' << text::format_real(v);
    for (double v : r.score_var) out << ',' << text::format_real(v);
    out << '\n';
  }
}

}  // namespace cemb
