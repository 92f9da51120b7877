#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>

#include "cemb/matrix.hpp"
#include "cemb/network.hpp"
#include "cemb/prob_embed.hpp"

namespace cemb {

/// Latent mean reweighted by normalized inverse variance.
///
/// c_n = 1 / sigma_n^2, q_n = c_n / max_j c_j (so max q = 1), and
/// mu_hat_n = q_n mu_n / sum_j q_j. pooled_var_n = (q_n / sum_j q_j)^2 sigma_n^2,
/// i.e. q is held constant when the variance is carried forward.
struct PooledFeature {
  Vector mu_hat;
  Vector q;
  Vector pooled_var;
};

PooledFeature confidence_pool(const GaussianEmbedding& e);
/// Same pooling from explicit variances (all > 0). Throws ShapeError on
/// width mismatch or an empty latent.
PooledFeature confidence_pool(std::span<const double> mu, std::span<const double> var);

/// Mean and variance of independent Gaussian coordinates.
struct GaussianMoments {
  Vector mean;
  Vector var;
};

/// Moments of W z + b for z with independent coordinates:
/// mean' = W mean + b, var'_i = sum_j W_ij^2 var_j.
GaussianMoments propagate_affine(std::span<const double> mean, std::span<const double> var,
                                 const AffineLayer& layer);

struct PredictionRecord {
  std::size_t sample_id = 0;
  Vector score_mean;
  Vector score_var;
  std::size_t predicted_class = 0;
  /// 1 / max(score_var[predicted_class], 1e-12).
  double confidence = 0.0;
  std::optional<std::size_t> true_label;
  /// Set when a relu head was crossed in mean-pass mode; the variances then
  /// ignore the nonlinearity.
  bool approximate = false;
};

/// Fills predicted_class (first maximum) and confidence from the score moments.
PredictionRecord make_prediction(Vector score_mean, Vector score_var,
                                 std::optional<std::size_t> true_label = std::nullopt,
                                 std::size_t sample_id = 0);

enum class HeadMode {
  /// Every head layer must use the identity activation.
  strict,
  /// Means go through the exact forward; variances use the affine rule.
  mean_pass,
};

/// Applies propagate_affine layer by layer starting from (mu_hat, pooled_var).
/// Throws UnsupportedHeadError for a relu layer in strict mode.
PredictionRecord propagate_network(const PooledFeature& pooled, std::span<const Layer> head,
                                   HeadMode mode = HeadMode::strict);

/// Header: sample_id,true_label,predicted_class,confidence,mean_0..mean_{C-1},var_0..var_{C-1}
/// An absent true label is written as an empty field.
void write_predictions_csv(std::ostream& out, std::span<const PredictionRecord> records);

}  // namespace cemb
