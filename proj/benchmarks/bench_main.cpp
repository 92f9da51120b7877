#include <benchmark/benchmark.h>

#include <vector>

#include "cemb/confidence.hpp"
#include "cemb/eval.hpp"
#include "cemb/network.hpp"
#include "cemb/prob_embed.hpp"
#include "cemb/random.hpp"

namespace {

using namespace cemb;

Vector draw(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

// 16 -> hidden -> 8 latent -> 3 classes
DenseNetwork make_net(std::size_t hidden, Rng& rng) {
  const std::vector<std::size_t> widths{16, hidden, 8, 3};
  const std::vector<Activation> acts{Activation::relu, Activation::identity, Activation::identity};
  return DenseNetwork::initialized(widths, acts, 1, rng);
}

void BM_Forward(benchmark::State& state) {
  Rng rng(1);
  const auto net = make_net(static_cast<std::size_t>(state.range(0)), rng);
  const Vector x = draw(rng, 16);
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, x));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(64)->Arg(256);

void BM_ForwardBackward(benchmark::State& state) {
  Rng rng(2);
  const auto net = make_net(static_cast<std::size_t>(state.range(0)), rng);
  const Vector x = draw(rng, 16);
  const Vector upstream{0.3, -0.2, -0.1};
  for (auto _ : state) {
    const auto cache = forward(net, x);
    benchmark::DoNotOptimize(backward(net, cache, upstream));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(64)->Arg(256);

void BM_PairLoss(benchmark::State& state) {
  Rng rng(3);
  const auto batch = static_cast<std::size_t>(state.range(0));
  std::vector<GaussianEmbedding> emb;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < batch; ++i) {
    emb.emplace_back(draw(rng, 8), draw(rng, 8, -2.0, 2.0));
    labels.push_back(i % 3);
  }
  const auto pairs = enumerate_genuine_pairs(labels);
  for (auto _ : state) benchmark::DoNotOptimize(pair_loss(emb, pairs));
  state.counters["pairs"] = static_cast<double>(pairs.size());
}
BENCHMARK(BM_PairLoss)->Arg(32)->Arg(128);

void BM_PoolAndPropagate(benchmark::State& state) {
  Rng rng(4);
  const auto net = make_net(32, rng);
  const Vector mu = draw(rng, 8);
  const Vector var = draw(rng, 8, 0.01, 2.0);
  for (auto _ : state) {
    const auto pooled = confidence_pool(mu, var);
    benchmark::DoNotOptimize(propagate_network(pooled, net.head()));
  }
}
BENCHMARK(BM_PoolAndPropagate);

void BM_MetricsAndRejection(benchmark::State& state) {
  Rng rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<PredictionRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    records.push_back(make_prediction(draw(rng, 3), draw(rng, 3, 0.1, 1.0), i % 3, i));
  }
  const std::vector<double> ratios{0.0, 0.05, 0.1, 0.2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics(records, 3));
    benchmark::DoNotOptimize(rejection_curve(records, 3, ratios, RejectionMode::global));
  }
}
BENCHMARK(BM_MetricsAndRejection)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
