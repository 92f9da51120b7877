#include "cemb/losses.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "cemb/errors.hpp"
#include "cemb/network.hpp"

namespace cemb {

namespace {
constexpr double kMinProbability = 1e-300;
}

ClassWeights compute_class_weights(std::span<const std::size_t> counts, double k) {
  if (!std::isfinite(k) || k < 0.0) {
    throw ConfigError("class-weight exponent must be finite and >= 0");
  }
  ClassWeights w;
  w.exponent = k;
  w.counts.assign(counts.begin(), counts.end());
  w.total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  w.weights.reserve(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw EmptyClassError("class " + std::to_string(c) + " has no samples");
    const double ratio = static_cast<double>(w.total) / static_cast<double>(counts[c]);
    w.weights.push_back(std::pow(ratio, k));
  }
  return w;
}

WeightedCeResult weighted_ce(std::span<const double> probs, std::size_t true_class,
                             const ClassWeights& w) {
  if (probs.size() != w.class_count()) {
    throw ShapeError("probability width " + std::to_string(probs.size()) + " but " +
                     std::to_string(w.class_count()) + " class weights");
  }
  if (true_class >= probs.size()) {
    throw ShapeError("true class " + std::to_string(true_class) + " out of range");
  }
  WeightedCeResult r;
  const double weight = w.weights[true_class];
  double pt = probs[true_class];
  if (pt <= kMinProbability) {
    pt = kMinProbability;
    r.saturated = true;
  }
  // Only the one-hot term of the class sum survives.
  r.loss = -weight * std::log(pt);
  r.grad_scores.resize(probs.size());
  for (std::size_t c = 0; c < probs.size(); ++c) {
    r.grad_scores[c] = weight * (probs[c] - (c == true_class ? 1.0 : 0.0));
  }
  return r;
}

WeightedCeResult weighted_ce_from_scores(std::span<const double> scores, std::size_t true_class,
                                         const ClassWeights& w) {
  const Vector p = softmax(scores);
  return weighted_ce(p, true_class, w);
}

}  // namespace cemb
