#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "cemb/matrix.hpp"

namespace cemb {

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

/// Diagonal Gaussian N(mu, exp(log_var)) over a D-dimensional latent.
class GaussianEmbedding {
 public:
  GaussianEmbedding() = default;
  /// Clamps log_var into [kLogVarMin, kLogVarMax]. Throws ShapeError on
  /// width mismatch and NumericError on non-finite input.
  GaussianEmbedding(Vector mu, Vector log_var);

  std::size_t dim() const { return mu_.size(); }
  const Vector& mu() const { return mu_; }
  const Vector& log_var() const { return log_var_; }
  double variance(std::size_t l) const;
  Vector variances() const;

 private:
  Vector mu_;
  Vector log_var_;
};

/// Per-dimension mean and variance of z_i - z_j.
struct DeltaDistribution {
  Vector mean;
  Vector variance;
};

DeltaDistribution delta_distribution(const GaussianEmbedding& a, const GaussianEmbedding& b);

/// Log of the density that two embeddings coincide (mutual likelihood score):
///   -1/2 sum_l [ (mu_a - mu_b)^2 / (s_a + s_b) + ln(s_a + s_b) ] - D/2 ln(2 pi)
double mls_score(const GaussianEmbedding& a, const GaussianEmbedding& b);

/// Unordered same-label index pairs (i < j).
using GenuinePairSet = std::vector<std::pair<std::size_t, std::size_t>>;

GenuinePairSet enumerate_genuine_pairs(std::span<const std::size_t> labels);

struct PairLossResult {
  double loss = 0.0;
  /// One entry per embedding, each of width D.
  std::vector<Vector> grad_mu;
  std::vector<Vector> grad_log_var;
};

/// Mean of -mls_score over `pairs`, with derivatives w.r.t. every mu and
/// log_var. Throws NoGenuinePairsError on an empty pair set.
PairLossResult pair_loss(std::span<const GaussianEmbedding> embeddings,
                         const GenuinePairSet& pairs);

}  // namespace cemb
