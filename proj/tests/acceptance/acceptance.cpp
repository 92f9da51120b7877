// Acceptance suite: one pass/fail line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cemb/checkpoint.hpp"
#include "cemb/checksum.hpp"
#include "cemb/confidence.hpp"
#include "cemb/eval.hpp"
#include "cemb/experiment.hpp"
#include "cemb/losses.hpp"
#include "cemb/prob_embed.hpp"
#include "cemb/train.hpp"
#include "oracles.hpp"

using namespace cemb;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool in_time = budget_s <= 0 || secs < budget_s;
  const bool ok = o.passed && in_time;
  if (!ok) ++failures;
  std::printf("[%s] criterion %d: %s: %s (%.1f s", ok ? "PASS" : "FAIL", id, name, o.detail.c_str(),
              secs);
  if (budget_s > 0) std::printf(", budget %.0f s", budget_s);
  std::printf(")\n");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// --- 1 ---------------------------------------------------------------------

Outcome gradient_fidelity() {
  Rng rng(101);
  double worst = 0.0;
  std::size_t probes = 0;

  // Weighted CE through random relu networks.
  const std::vector<std::size_t> widths{6, 8, 5, 3};
  const std::vector<Activation> acts{Activation::relu, Activation::identity, Activation::identity};
  while (probes < 100) {
    std::vector<std::size_t> counts{1 + rng.index(100), 1 + rng.index(100), 1 + rng.index(100)};
    const ClassWeights w = compute_class_weights(counts, rng.uniform(0, 1.5));
    const std::size_t target = rng.index(3);
    const auto net = oracle::random_network(rng, widths, acts);
    const Vector x = oracle::random_vector(rng, 6, -1, 1);
    const ScoreLoss loss = [&](std::span<const double> s) {
      const auto r = weighted_ce_from_scores(s, target, w);
      return LossValue{r.loss, r.grad_scores};
    };
    const auto rep = gradient_check(net, loss, x, 1e-4);
    if (rep.near_kink) continue;
    worst = std::max(worst, rep.worst_relative_error);
    ++probes;
  }

  // Pair loss w.r.t. every mu and log-variance.
  std::size_t pair_probes = 0;
  while (pair_probes < 100) {
    const std::size_t n = 2 + rng.index(6), d = 1 + rng.index(5);
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = rng.index(3);
    labels[1] = labels[0];
    const auto pairs = enumerate_genuine_pairs(labels);
    Vector flat;
    for (std::size_t i = 0; i < n; ++i) {
      for (double v : oracle::random_vector(rng, d, -2, 2)) flat.push_back(v);
      for (double v : oracle::random_vector(rng, d, -4, 4)) flat.push_back(v);
    }
    auto build = [&](std::span<const double> f) {
      std::vector<GaussianEmbedding> e;
      for (std::size_t i = 0; i < n; ++i) {
        const double* p = f.data() + 2 * d * i;
        e.emplace_back(Vector(p, p + d), Vector(p + d, p + 2 * d));
      }
      return e;
    };
    const auto res = pair_loss(build(flat), pairs);
    const Vector fd = oracle::central_gradient(
        [&](std::span<const double> f) { return pair_loss(build(f), pairs).loss; }, flat);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < d; ++l) {
        worst = std::max(worst, oracle::relative_error(res.grad_mu[i][l], fd[2 * d * i + l]));
        worst = std::max(worst, oracle::relative_error(res.grad_log_var[i][l], fd[2 * d * i + d + l]));
      }
    }
    ++pair_probes;
  }

  // Pair loss back through an uncertainty head producing one sample's log-variance.
  std::size_t head_probes = 0;
  const std::vector<std::size_t> hw{4, 6, 4};
  const std::vector<Activation> ha{Activation::relu, Activation::identity};
  while (head_probes < 20) {
    const auto head = oracle::random_network(rng, hw, ha);
    const Vector x = oracle::random_vector(rng, 4, -1, 1);
    const GaussianEmbedding other(oracle::random_vector(rng, 4, -1, 1),
                                  oracle::random_vector(rng, 4, -1, 1));
    const Vector mu = oracle::random_vector(rng, 4, -1, 1);
    const ScoreLoss loss = [&](std::span<const double> log_var) {
      const std::vector<GaussianEmbedding> e{GaussianEmbedding(mu, Vector(log_var.begin(), log_var.end())),
                                             other};
      const auto r = pair_loss(e, {{0, 1}});
      return LossValue{r.loss, r.grad_log_var[0]};
    };
    const auto rep = gradient_check(head, loss, x, 1e-4);
    if (rep.near_kink) continue;
    worst = std::max(worst, rep.worst_relative_error);
    ++head_probes;
  }
  const std::size_t total = probes + pair_probes + head_probes;
  return {worst < 1e-4, fmt("worst relative error %.2e", worst) + " over " +
                            std::to_string(total) + " probes"};
}

// --- 2 ---------------------------------------------------------------------

Outcome mls_correctness() {
  Rng rng(202);
  double worst = 0.0;
  bool symmetric = true;
  for (int t = 0; t < 100; ++t) {
    const double s = rng.uniform(0.1, 10.0);
    const double va = s * rng.uniform(0.05, 0.95), vb = s - va;
    const double ma = rng.uniform(-3, 3), mb = rng.uniform(-3, 3);
    const GaussianEmbedding a({ma}, {std::log(va)}), b({mb}, {std::log(vb)});
    worst = std::max(worst, std::abs(std::exp(mls_score(a, b)) - oracle::mls_quadrature(ma, va, mb, vb)));
    symmetric = symmetric && mls_score(a, b) == mls_score(b, a);
  }
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + rng.index(8);
    const GaussianEmbedding a(oracle::random_vector(rng, d, -3, 3), oracle::random_vector(rng, d, -5, 5));
    const GaussianEmbedding b(oracle::random_vector(rng, d, -3, 3), oracle::random_vector(rng, d, -5, 5));
    symmetric = symmetric && mls_score(a, b) == mls_score(b, a);
  }
  const double step = 1e-3;
  double worst_grid = 0.0;
  for (int t = 0; t < 10; ++t) {
    const double d = rng.uniform(0.3, 3.0);
    double best = -1e300, best_s = 0;
    for (double s = step; s <= 2.0 * d * d + 1.0; s += step) {
      const double r = mls_score(GaussianEmbedding({d}, {std::log(s / 2)}),
                                 GaussianEmbedding({0.0}, {std::log(s / 2)}));
      if (r > best) {
        best = r;
        best_s = s;
      }
    }
    worst_grid = std::max(worst_grid, std::abs(best_s - d * d) / step);
  }
  const bool ok = worst < 1e-6 && symmetric && worst_grid <= 1.0 + 1e-9;
  return {ok, fmt("max |exp(R) - quadrature| %.2e", worst) + ", symmetry " +
                  (symmetric ? "exact" : "BROKEN") + fmt(", argmax off by %.2f grid steps", worst_grid)};
}

// --- 3 ---------------------------------------------------------------------

Outcome propagation_correctness() {
  Rng rng(303);
  std::size_t outside = 0, compared = 0;
  double worst_z = 0.0;
  bool zero_exact = true;
  for (int t = 0; t < 50; ++t) {
    const std::size_t in = 2 + rng.index(5), out = 1 + rng.index(4);
    std::vector<Layer> head{{oracle::random_affine(rng, out, in), Activation::identity}};
    const Vector mean = oracle::random_vector(rng, in, -2, 2);
    const Vector var = oracle::random_vector(rng, in, 0.01, 3);
    const auto closed = propagate_affine(mean, var, head[0].affine);
    const auto mc = oracle::mc_propagation(mean, var, head, 1000000, rng.next_u64());
    for (std::size_t i = 0; i < out; ++i) {
      const double zm = std::abs(closed.mean[i] - mc.mean[i]) / mc.mean_se[i];
      const double zv = std::abs(closed.var[i] - mc.var[i]) / mc.var_se[i];
      worst_z = std::max({worst_z, zm, zv});
      outside += (zm >= 3.0) + (zv >= 3.0);
      compared += 2;
    }
    // Zero variance reproduces the deterministic forward through a stacked head.
    std::vector<Layer> stack{{oracle::random_affine(rng, 5, in), Activation::identity},
                             {oracle::random_affine(rng, out, 5), Activation::identity}};
    GaussianMoments m{mean, Vector(in, 0.0)};
    for (const auto& l : stack) m = propagate_affine(m.mean, m.var, l.affine);
    const DenseNetwork net(stack, 1);
    zero_exact = zero_exact && m.mean == forward(net, mean).scores() &&
                 std::all_of(m.var.begin(), m.var.end(), [](double v) { return v == 0.0; });
  }
  return {outside == 0 && zero_exact,
          std::to_string(outside) + " of " + std::to_string(compared) +
              fmt(" moments outside 3 SE (max %.2f SE", worst_z) +
              fmt("; %.2f expected by chance)", 0.0027 * static_cast<double>(compared)) +
              ", zero-variance forward " +
              (zero_exact ? "exact" : "MISMATCH")};
}

// --- 4 ---------------------------------------------------------------------

Outcome pooling_invariants() {
  Rng rng(404);
  bool scale_exact = true, uniform_exact = true, decreasing = true;
  double worst_general = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t d = 1 + rng.index(12);
    const Vector mu = oracle::random_vector(rng, d, -5, 5);
    Vector var(d);
    for (double& v : var) v = std::exp(rng.uniform(-10, 10));
    const auto p = confidence_pool(mu, var);

    const double alpha = std::ldexp(1.0, static_cast<int>(rng.index(41)) - 20);
    Vector scaled = var;
    for (double& v : scaled) v *= alpha;
    const auto s = confidence_pool(mu, scaled);
    scale_exact = scale_exact && s.q == p.q && s.mu_hat == p.mu_hat;

    const double beta = std::exp(rng.uniform(-5, 5));
    Vector general = var;
    for (double& v : general) v *= beta;
    const auto g = confidence_pool(mu, general);
    for (std::size_t n = 0; n < d; ++n) worst_general = std::max(worst_general, std::abs(g.q[n] - p.q[n]));

    const auto u = confidence_pool(mu, Vector(d, var[0]));
    for (std::size_t n = 0; n < d; ++n) {
      uniform_exact = uniform_exact && u.mu_hat[n] == mu[n] / static_cast<double>(d);
    }

    if (d >= 2) {
      const std::size_t n = rng.index(d);
      Vector v = var;
      v[n] = *std::max_element(v.begin(), v.end()) * 1.01;
      double prev = confidence_pool(mu, v).q[n];
      for (int k = 0; k < 20; ++k) {
        v[n] *= rng.uniform(1.001, 3.0);
        const double q = confidence_pool(mu, v).q[n];
        decreasing = decreasing && q < prev;
        prev = q;
      }
    }
  }
  const bool ok = scale_exact && uniform_exact && decreasing && worst_general < 1e-15;
  return {ok, std::string("power-of-two rescale ") + (scale_exact ? "bit-exact" : "BROKEN") +
                  fmt(", arbitrary rescale max |dq| %.1e", worst_general) + ", uniform mu/D " +
                  (uniform_exact ? "exact" : "BROKEN") + ", q strictly decreasing " +
                  (decreasing ? "yes" : "NO")};
}

// --- 5, 6 ------------------------------------------------------------------

struct BenchmarkRun {
  BenchmarkConfig config;
  BenchmarkResult result;
};

Outcome synthetic_benchmark(const BenchmarkRun& run) {
  double base = 0, pooled = 0, improvement = 0;
  std::string per_seed;
  for (const auto& s : run.result.seeds) {
    base += s.baseline_bacc;
    pooled += s.pooled_bacc;
    improvement += s.pooled_bacc - s.baseline_bacc;
    per_seed += fmt(" %+.3f", s.pooled_bacc - s.baseline_bacc);
  }
  const double n = static_cast<double>(run.result.seeds.size());
  base /= n;
  pooled /= n;
  improvement /= n;
  const bool ok = pooled >= base && improvement > 0.0;
  return {ok, fmt("mean BACC pooled %.4f", pooled) + fmt(" vs baseline %.4f", base) +
                  fmt(", mean improvement %+.4f", improvement) + " (per seed" + per_seed + ")"};
}

Outcome rejection_behaviour(const BenchmarkRun& run) {
  const std::size_t rows = run.config.rejection_ratios.size();
  Vector acc(rows, 0.0), bacc(rows, 0.0);
  for (const auto& s : run.result.seeds) {
    for (std::size_t r = 0; r < rows; ++r) {
      acc[r] += s.rejection[r].accuracy / static_cast<double>(run.result.seeds.size());
      bacc[r] += s.rejection[r].balanced_accuracy / static_cast<double>(run.result.seeds.size());
    }
  }
  bool monotone = true;
  std::string curve;
  for (std::size_t r = 0; r < rows; ++r) {
    if (r > 0) monotone = monotone && acc[r] >= acc[r - 1] && bacc[r] >= bacc[r - 1];
    curve += fmt(" %.2f:", run.config.rejection_ratios[r]) + fmt("%.4f/", acc[r]) + fmt("%.4f", bacc[r]);
  }

  // Oracle confidence on a held-out fold: 1 when correct, 0 otherwise.
  SynthConfig sc = run.config.synth;
  sc.seed = run.config.seeds.front();
  const Dataset data = synth_generate(sc);
  const auto folds = kfold_split(data, run.config.folds, sc.seed);
  TrainConfig tc = run.config.train;
  tc.seed = sc.seed;
  const TrainedModel model = train_all(data.subset(folds[0].train), tc);
  auto records = predict_dataset(model, data.subset(folds[0].test));
  std::size_t errors = 0;
  for (auto& r : records) {
    const bool correct = r.predicted_class == *r.true_label;
    r.confidence = correct ? 1.0 : 0.0;
    errors += !correct;
  }
  const std::size_t n = records.size();
  bool oracle_ok = true;
  double prev_acc = -1.0;
  std::size_t prev_rejected = 0;
  for (double ratio : run.config.rejection_ratios) {
    const auto kept = retain_confident(records, ratio, RejectionMode::global);
    const double a = metrics(kept, data.class_count).accuracy;
    if (prev_acc >= 0.0) {
      // Strict while errors remain in the previous retained set.
      oracle_ok = oracle_ok && (prev_rejected < errors ? a > prev_acc : a >= prev_acc);
    }
    prev_acc = a;
    prev_rejected = n - kept.size();
  }
  return {monotone && oracle_ok, std::string("mean ACC/BACC by ratio") + curve +
                                     (monotone ? "" : " NOT monotone") + ", oracle confidence " +
                                     (oracle_ok ? "strictly increasing" : "NOT increasing") + " (" +
                                     std::to_string(errors) + " errors in " + std::to_string(n) + ")"};
}

// --- 7 ---------------------------------------------------------------------

std::vector<std::string> end_to_end(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SynthConfig sc = BenchmarkConfig{}.synth;
  sc.seed = 11;
  save_dataset(synth_generate(sc), dir / "data.csv");
  const Dataset data = load_dataset(dir / "data.csv");
  TrainConfig tc;
  tc.seed = 11;
  const TrainedModel m = train_all(data, tc);
  save_checkpoint(m.backbone, dir / "backbone.ckpt");
  save_checkpoint(m.uncertainty_head, dir / "uncertainty.ckpt");
  save_checkpoint(m.classifier, dir / "classifier.ckpt");
  const auto records = predict_dataset(m, data);
  const std::vector<double> ratios{0.0, 0.05, 0.10, 0.20};
  {
    std::ofstream p(dir / "predictions.csv");
    write_predictions_csv(p, records);
    std::ofstream mt(dir / "metrics.csv");
    write_metrics_csv(mt, metrics(records, data.class_count));
    std::ofstream rj(dir / "rejection.csv");
    write_rejection_csv(rj, rejection_curve(records, data.class_count, ratios, RejectionMode::global));
    std::ofstream pc(dir / "rejection_per_class.csv");
    write_rejection_csv(pc, rejection_curve(records, data.class_count, ratios, RejectionMode::per_class));
  }
  std::vector<std::string> sums;
  for (const char* f : {"data.csv", "backbone.ckpt", "uncertainty.ckpt", "classifier.ckpt",
                        "predictions.csv", "metrics.csv", "rejection.csv", "rejection_per_class.csv"}) {
    sums.push_back(std::string(f) + "=" + to_hex(file_checksum(dir / f)));
  }
  return sums;
}

Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "cemb_acceptance_determinism";
  std::filesystem::remove_all(root);
  const auto a = end_to_end(root / "a");
  const auto b = end_to_end(root / "b");
  std::filesystem::remove_all(root);
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return {same == a.size(), std::to_string(same) + " of " + std::to_string(a.size()) +
                                " artifacts bit-identical across two runs"};
}

// --- 8 ---------------------------------------------------------------------

Outcome stage_isolation(const BenchmarkConfig& config) {
  bool frozen = true;
  double noise = 0, signal = 0;
  std::string per_seed;
  for (std::uint64_t seed : config.seeds) {
    SynthConfig sc = config.synth;
    sc.seed = seed;
    const Dataset data = synth_generate(sc);
    TrainConfig tc = config.train;
    tc.seed = seed;
    const TrainedModel s1 = train_backbone(data, tc);
    const auto before = encode_checkpoint(s1.backbone);
    const auto before_cls = encode_checkpoint(s1.classifier);
    const TrainedModel s2 = train_uncertainty(s1, data);
    frozen = frozen && encode_checkpoint(s2.backbone) == before &&
             encode_checkpoint(s2.classifier) == before_cls;
    const VarianceSplit v = variance_by_noise_share(s2, data, sc.signal_dims);
    noise += v.noise_driven_variance;
    signal += v.signal_driven_variance;
    per_seed += fmt(" %.2f", v.noise_driven_variance) + fmt("/%.2f", v.signal_driven_variance);
  }
  const double n = static_cast<double>(config.seeds.size());
  noise /= n;
  signal /= n;
  return {frozen && noise > signal,
          std::string("stage-1 parameters ") + (frozen ? "bit-identical" : "CHANGED") +
              fmt(", mean sigma^2 noise-driven %.3f", noise) + fmt(" vs signal-driven %.3f", signal) +
              " (per seed" + per_seed + ")"};
}

}  // namespace

int main() {
  report(1, "gradient fidelity", 60, gradient_fidelity);
  report(2, "MLS correctness", 60, mls_correctness);
  report(3, "propagation correctness", 120, propagation_correctness);
  report(4, "pooling invariants", 0, pooling_invariants);

  BenchmarkRun run;
  report(5, "synthetic benchmark", 300, [&] {
    run.result = run_benchmark(run.config);
    return synthetic_benchmark(run);
  });
  report(6, "rejection behaviour", 60, [&] { return rejection_behaviour(run); });
  report(7, "determinism", 0, determinism);
  report(8, "stage isolation", 0, [&] { return stage_isolation(run.config); });

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
