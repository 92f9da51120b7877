#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cemb/matrix.hpp"

namespace cemb {

/// Per-class cross-entropy weights n_c = (N / N_c)^k.
struct ClassWeights {
  Vector weights;
  double exponent = 0.0;  // k
  std::size_t total = 0;  // N
  std::vector<std::size_t> counts;  // N_c

  std::size_t class_count() const { return weights.size(); }
};

/// Throws EmptyClassError if any count is zero, ConfigError if k < 0 or not finite.
ClassWeights compute_class_weights(std::span<const std::size_t> counts, double k);

struct WeightedCeResult {
  double loss = 0.0;
  /// d loss / d pre-softmax scores = n_t * (p - onehot(t)).
  Vector grad_scores;
  /// p_t fell below 1e-300 and was clamped before taking the log.
  bool saturated = false;
};

/// -n_t * ln(p_t) for softmax probabilities `probs` and true class t.
WeightedCeResult weighted_ce(std::span<const double> probs, std::size_t true_class,
                             const ClassWeights& w);

/// Convenience: softmax then weighted_ce.
WeightedCeResult weighted_ce_from_scores(std::span<const double> scores, std::size_t true_class,
                                         const ClassWeights& w);

}  // namespace cemb
