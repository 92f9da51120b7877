#include "doctest.h"

#include <cmath>
#include <numbers>

#include "cemb/errors.hpp"
#include "cemb/prob_embed.hpp"
#include "oracles.hpp"

using namespace cemb;

namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

GaussianEmbedding g1(double mu, double var) { return GaussianEmbedding({mu}, {std::log(var)}); }

GaussianEmbedding random_embedding(Rng& rng, std::size_t d) {
  return GaussianEmbedding(oracle::random_vector(rng, d, -2, 2), oracle::random_vector(rng, d, -2, 2));
}
}  // namespace

TEST_CASE("log-variance is clamped") {
  const GaussianEmbedding e({0, 0, 0}, {-40, 3, 40});
  CHECK(e.log_var() == Vector{kLogVarMin, 3, kLogVarMax});
  CHECK(e.variance(0) == doctest::Approx(4.54e-5).epsilon(1e-3));
  CHECK(e.variance(2) == doctest::Approx(2.2026e4).epsilon(1e-4));
  CHECK_THROWS_AS(GaussianEmbedding({0, 0}, {0}), ShapeError);
  CHECK_THROWS_AS(GaussianEmbedding({std::nan("")}, {0}), NumericError);
}

TEST_CASE("delta distribution examples") {
  const auto same = delta_distribution(g1(1.0, 0.5), g1(1.0, 0.5));
  CHECK(same.mean[0] == 0.0);
  CHECK(same.variance[0] == doctest::Approx(1.0).epsilon(1e-15));
  const auto d = delta_distribution(g1(1.0, 0.3), g1(0.0, 0.7));
  CHECK(d.mean[0] == 1.0);
  CHECK(d.variance[0] == doctest::Approx(1.0).epsilon(1e-15));
  const auto swapped = delta_distribution(g1(0.0, 0.7), g1(1.0, 0.3));
  CHECK(swapped.mean[0] == -1.0);
  CHECK(swapped.variance[0] == d.variance[0]);
  CHECK_THROWS_AS(delta_distribution(g1(0, 1), GaussianEmbedding({0, 0}, {0, 0})), ShapeError);
}

TEST_CASE("delta variance sums both embeddings' variances") {
  const auto d = delta_distribution(g1(0.0, 0.25), g1(0.0, 2.0));
  CHECK(d.variance[0] == doctest::Approx(2.25).epsilon(1e-14));
}

TEST_CASE("mls score examples") {
  CHECK(mls_score(g1(0.0, 0.5), g1(0.0, 0.5)) == doctest::Approx(-0.9189385).epsilon(1e-7));
  CHECK(mls_score(g1(1.0, 0.5), g1(0.0, 0.5)) == doctest::Approx(-1.4189385).epsilon(1e-7));
  CHECK(std::exp(mls_score(g1(1.0, 0.5), g1(0.0, 0.5))) == doctest::Approx(0.2419707).epsilon(1e-6));
}

TEST_CASE("quadrature oracle examples") {
  CHECK(oracle::mls_quadrature(0, 0.5, 0, 0.5) == doctest::Approx(0.3989423).epsilon(1e-6));
  CHECK(oracle::mls_quadrature(1, 0.5, 0, 0.5) == doctest::Approx(0.2419707).epsilon(1e-6));
  double prev = oracle::mls_quadrature(0, 0.5, 0, 0.5);
  for (double gap = 0.5; gap <= 8.0; gap += 0.5) {
    const double s = oracle::mls_quadrature(gap, 0.5, 0, 0.5);
    CHECK(s < prev);
    prev = s;
  }
  CHECK(prev < 1e-12);
}

TEST_CASE("exp(mls) agrees with quadrature on random 1-D pairs") {
  Rng rng(21);
  for (int t = 0; t < 100; ++t) {
    const double s = rng.uniform(0.1, 10.0);
    const double split = rng.uniform(0.05, 0.95);
    const double va = s * split, vb = s - va;
    const double ma = rng.uniform(-3, 3), mb = rng.uniform(-3, 3);
    const double exact = std::exp(mls_score(g1(ma, va), g1(mb, vb)));
    CHECK(std::abs(exact - oracle::mls_quadrature(ma, va, mb, vb)) < 1e-6);
  }
}

TEST_CASE("mls is exactly symmetric and decreasing in squared distance") {
  Rng rng(22);
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = 1 + rng.index(6);
    const auto a = random_embedding(rng, d);
    const auto b = random_embedding(rng, d);
    CHECK(mls_score(a, b) == mls_score(b, a));
    Vector far = b.mu();
    const std::size_t l = rng.index(d);
    far[l] += (far[l] >= a.mu()[l] ? 1.0 : -1.0) * rng.uniform(0.01, 2.0);
    CHECK(mls_score(a, GaussianEmbedding(far, b.log_var())) < mls_score(a, b));
  }
}

TEST_CASE("mls peaks at total variance equal to the squared gap") {
  for (double d : {0.5, 1.0, 2.0, 3.0}) {
    double best_s = 0, best = -1e300;
    for (double s = 1e-3; s <= 12.0; s += 1e-3) {
      const double r = mls_score(g1(d, s / 2), g1(0, s / 2));
      if (r > best) {
        best = r;
        best_s = s;
      }
    }
    CHECK(std::abs(best_s - d * d) <= 1e-3 + 1e-9);
  }
}

TEST_CASE("genuine pair enumeration") {
  CHECK(enumerate_genuine_pairs(std::vector<std::size_t>{0, 0, 1}) == GenuinePairSet{{0, 1}});
  CHECK(enumerate_genuine_pairs(std::vector<std::size_t>{0, 1, 2}).empty());
  CHECK(enumerate_genuine_pairs(std::vector<std::size_t>{0, 0, 0}) ==
        GenuinePairSet{{0, 1}, {0, 2}, {1, 2}});
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::size_t> labels(1 + rng.index(30));
    for (auto& l : labels) l = rng.index(4);
    const auto pairs = enumerate_genuine_pairs(labels);
    std::size_t expected = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      std::size_t n = 0;
      for (auto l : labels) n += l == c;
      expected += n * (n - 1) / 2;
    }
    CHECK(pairs.size() == expected);
    for (auto [i, j] : pairs) {
      CHECK(i < j);
      CHECK(labels[i] == labels[j]);
    }
  }
}

TEST_CASE("pair loss examples") {
  const std::vector<GaussianEmbedding> same{g1(0, 0.5), g1(0, 0.5)};
  CHECK(pair_loss(same, {{0, 1}}).loss == doctest::Approx(0.9189385).epsilon(1e-7));
  const std::vector<GaussianEmbedding> three{g1(1, 0.5), g1(0, 0.5), g1(0, 0.5)};
  CHECK(pair_loss(three, {{0, 1}, {1, 2}}).loss == doctest::Approx(1.1689385).epsilon(1e-7));
  CHECK_THROWS_AS(pair_loss(three, {}), NoGenuinePairsError);
}

TEST_CASE("pair loss gradients match finite differences") {
  Rng rng(23);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 2 + rng.index(5), d = 1 + rng.index(4);
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = rng.index(2);
    labels[1] = labels[0];
    const auto pairs = enumerate_genuine_pairs(labels);
    Vector flat;  // mu then log_var for each embedding
    for (std::size_t i = 0; i < n; ++i) {
      for (double v : oracle::random_vector(rng, d, -2, 2)) flat.push_back(v);
      for (double v : oracle::random_vector(rng, d, -3, 3)) flat.push_back(v);
    }
    auto build = [&](std::span<const double> f) {
      std::vector<GaussianEmbedding> e;
      for (std::size_t i = 0; i < n; ++i) {
        const double* p = f.data() + 2 * d * i;
        e.emplace_back(Vector(p, p + d), Vector(p + d, p + 2 * d));
      }
      return e;
    };
    const auto result = pair_loss(build(flat), pairs);
    const Vector fd = oracle::central_gradient(
        [&](std::span<const double> f) { return pair_loss(build(f), pairs).loss; }, flat);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < d; ++l) {
        CHECK(oracle::relative_error(result.grad_mu[i][l], fd[2 * d * i + l]) < 1e-4);
        CHECK(oracle::relative_error(result.grad_log_var[i][l], fd[2 * d * i + d + l]) < 1e-4);
      }
    }
  }
}
