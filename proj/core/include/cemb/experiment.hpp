#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "cemb/data.hpp"
#include "cemb/eval.hpp"
#include "cemb/train.hpp"

namespace cemb {

/// Predicted variance per latent dimension, split by what drives the dimension.
///
/// noise_share[l] is the fraction of the within-class spread of mu_l that
/// disappears when the noise input dims are pinned to their class means.
/// The half of the latent dims with the largest share are "noise-driven";
/// the rest are "signal-driven".
struct VarianceSplit {
  Vector noise_share;
  Vector mean_variance;  // mean predicted sigma^2 per latent dim
  std::vector<std::size_t> noise_driven;
  std::vector<std::size_t> signal_driven;
  double noise_driven_variance = 0.0;
  double signal_driven_variance = 0.0;
};

/// Input dims [signal_dims, width) are treated as the noise dims.
VarianceSplit variance_by_noise_share(const TrainedModel& model, const Dataset& data,
                                      std::size_t signal_dims);

struct BenchmarkConfig {
  SynthConfig synth{.seed = 0,
                    .classes = 3,
                    .class_counts = {600, 150, 50},
                    .signal_dims = 8,
                    .noise_dims = 8,
                    .separation = 1.0,
                    .noise_scales = {},
                    .corrupted_fraction = 0.3,
                    .corruption_multiplier = 5.0};
  TrainConfig train;
  std::size_t folds = 5;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> rejection_ratios{0.0, 0.05, 0.10, 0.20};
  RejectionMode mode = RejectionMode::global;
};

struct FoldResult {
  std::uint64_t seed = 0;
  std::size_t fold = 0;
  MetricSummary baseline;  // stage-1 backbone scores
  MetricSummary pooled;  // confidence-pooled model
  RejectionCurve rejection;  // on the pooled model's records
  VarianceSplit variance;  // on the held-out fold
};

struct SeedSummary {
  std::uint64_t seed = 0;
  double baseline_bacc = 0.0;
  double pooled_bacc = 0.0;
  double noise_driven_variance = 0.0;
  double signal_driven_variance = 0.0;
  std::vector<RejectionRow> rejection;  // fold means per ratio
};

struct BenchmarkResult {
  std::vector<FoldResult> folds;
  std::vector<SeedSummary> seeds;
};

/// For each seed: generate data (synth.seed = seed), split into stratified
/// folds, train all stages on each training part (train.seed = seed) and
/// score the held-out part.
BenchmarkResult run_benchmark(const BenchmarkConfig& config,
                              const std::function<void(const FoldResult&)>& on_fold = {});

/// seed,fold,baseline_bacc,pooled_bacc,baseline_acc,pooled_acc,noise_var,signal_var
void write_benchmark_csv(std::ostream& out, const BenchmarkResult& result);

}  // namespace cemb
