#include "cemb/prob_embed.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cemb/errors.hpp"

namespace cemb {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void require_same_dim(const GaussianEmbedding& a, const GaussianEmbedding& b) {
  if (a.dim() != b.dim()) {
    throw ShapeError("embedding widths differ: " + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()));
  }
}

}  // namespace

GaussianEmbedding::GaussianEmbedding(Vector mu, Vector log_var)
    : mu_(std::move(mu)), log_var_(std::move(log_var)) {
  if (mu_.size() != log_var_.size()) {
    throw ShapeError("mu has width " + std::to_string(mu_.size()) + " but log_var has " +
                     std::to_string(log_var_.size()));
  }
  if (!all_finite(mu_) || !all_finite(log_var_)) {
    throw NumericError("embedding has non-finite entries");
  }
  for (double& v : log_var_) v = std::clamp(v, kLogVarMin, kLogVarMax);
}

double GaussianEmbedding::variance(std::size_t l) const { return std::exp(log_var_[l]); }

Vector GaussianEmbedding::variances() const {
  Vector v(log_var_.size());
  for (std::size_t l = 0; l < v.size(); ++l) v[l] = std::exp(log_var_[l]);
  return v;
}

DeltaDistribution delta_distribution(const GaussianEmbedding& a, const GaussianEmbedding& b) {
  require_same_dim(a, b);
  DeltaDistribution d;
  d.mean.resize(a.dim());
  d.variance.resize(a.dim());
  for (std::size_t l = 0; l < a.dim(); ++l) {
    d.mean[l] = a.mu()[l] - b.mu()[l];
    d.variance[l] = a.variance(l) + b.variance(l);
  }
  return d;
}

double mls_score(const GaussianEmbedding& a, const GaussianEmbedding& b) {
  require_same_dim(a, b);
  double acc = 0.0;
  for (std::size_t l = 0; l < a.dim(); ++l) {
    const double diff = a.mu()[l] - b.mu()[l];
    // Same expression for (a,b) and (b,a): addition is commutative and diff is squared.
    const double s = a.variance(l) + b.variance(l);
    acc += diff * diff / s + std::log(s);
  }
  return -0.5 * acc - 0.5 * static_cast<double>(a.dim()) * kLog2Pi;
}

GenuinePairSet enumerate_genuine_pairs(std::span<const std::size_t> labels) {
  GenuinePairSet pairs;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      if (labels[i] == labels[j]) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

PairLossResult pair_loss(std::span<const GaussianEmbedding> embeddings,
                         const GenuinePairSet& pairs) {
  if (pairs.empty()) throw NoGenuinePairsError("pair loss needs at least one genuine pair");
  PairLossResult r;
  const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().dim();
  r.grad_mu.assign(embeddings.size(), Vector(dim, 0.0));
  r.grad_log_var.assign(embeddings.size(), Vector(dim, 0.0));
  const double inv_count = 1.0 / static_cast<double>(pairs.size());

  for (const auto& [i, j] : pairs) {
    if (i >= embeddings.size() || j >= embeddings.size() || i == j) {
      throw ShapeError("pair (" + std::to_string(i) + "," + std::to_string(j) +
                       ") does not index two distinct embeddings");
    }
    const GaussianEmbedding& a = embeddings[i];
    const GaussianEmbedding& b = embeddings[j];
    require_same_dim(a, b);
    r.loss -= mls_score(a, b) * inv_count;
    for (std::size_t l = 0; l < dim; ++l) {
      const double va = a.variance(l);
      const double vb = b.variance(l);
      const double s = va + vb;
      const double d = a.mu()[l] - b.mu()[l];
      // -R = 1/2 (d^2/s + ln s) + const
      const double dmu = d / s;
      const double ds = 0.5 * (1.0 / s - d * d / (s * s));
      r.grad_mu[i][l] += dmu * inv_count;
      r.grad_mu[j][l] -= dmu * inv_count;
      // ds/d(log_var) = variance
      r.grad_log_var[i][l] += ds * va * inv_count;
      r.grad_log_var[j][l] += ds * vb * inv_count;
    }
  }
  return r;
}

}  // namespace cemb
