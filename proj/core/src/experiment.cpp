#include "cemb/experiment.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "cemb/errors.hpp"
#include "cemb/text.hpp"

namespace cemb {
namespace {

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

VarianceSplit variance_by_noise_share(const TrainedModel& model, const Dataset& data,
                                      std::size_t signal_dims) {
  const std::size_t n = data.size();
  const std::size_t width = data.width();
  const std::size_t dim = model.backbone.latent_width();
  if (signal_dims > width) throw ShapeError("signal_dims exceeds the input width");
  if (n == 0) throw ShapeError("variance split needs samples");

  RealMatrix class_means(data.class_count, width);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.row(i);
    auto m = class_means.row(data.labels[i]);
    for (std::size_t d = 0; d < width; ++d) m[d] += row[d];
  }
  for (std::size_t c = 0; c < data.class_count; ++c) {
    if (data.class_counts[c] == 0) continue;
    for (double& v : class_means.row(c)) v /= static_cast<double>(data.class_counts[c]);
  }

  std::vector<Vector> full(n);
  std::vector<Vector> pinned(n);
  VarianceSplit split;
  split.mean_variance.assign(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const GaussianEmbedding e = embed(model, data.row(i));
    for (std::size_t l = 0; l < dim; ++l) split.mean_variance[l] += e.variance(l) / static_cast<double>(n);
    full[i] = e.mu();
    Vector x(data.row(i).begin(), data.row(i).end());
    const auto m = class_means.row(data.labels[i]);
    for (std::size_t d = signal_dims; d < width; ++d) x[d] = m[d];
    pinned[i] = latent(model.backbone, forward(model.backbone, x));
  }

  // Within-class spread of mu with and without the noise inputs.
  RealMatrix latent_means(data.class_count, dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto m = latent_means.row(data.labels[i]);
    for (std::size_t l = 0; l < dim; ++l) m[l] += full[i][l];
  }
  for (std::size_t c = 0; c < data.class_count; ++c) {
    if (data.class_counts[c] == 0) continue;
    for (double& v : latent_means.row(c)) v /= static_cast<double>(data.class_counts[c]);
  }
  split.noise_share.assign(dim, 0.0);
  for (std::size_t l = 0; l < dim; ++l) {
    double spread = 0.0;
    double removed = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = full[i][l] - latent_means(data.labels[i], l);
      const double delta = full[i][l] - pinned[i][l];
      spread += dev * dev;
      removed += delta * delta;
    }
    split.noise_share[l] = spread > 0.0 ? std::min(1.0, removed / spread) : 0.0;
  }

  std::vector<std::size_t> order(dim);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return split.noise_share[a] > split.noise_share[b];
  });
  const std::size_t half = dim / 2;
  split.noise_driven.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
  split.signal_driven.assign(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
  for (std::size_t l : split.noise_driven) split.noise_driven_variance += split.mean_variance[l];
  for (std::size_t l : split.signal_driven) split.signal_driven_variance += split.mean_variance[l];
  if (!split.noise_driven.empty()) {
    split.noise_driven_variance /= static_cast<double>(split.noise_driven.size());
  }
  if (!split.signal_driven.empty()) {
    split.signal_driven_variance /= static_cast<double>(split.signal_driven.size());
  }
  return split;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config,
                              const std::function<void(const FoldResult&)>& on_fold) {
  BenchmarkResult result;
  for (std::uint64_t seed : config.seeds) {
    SynthConfig synth = config.synth;
    synth.seed = seed;
    TrainConfig train = config.train;
    train.seed = seed;
    const Dataset data = synth_generate(synth);
    const auto folds = kfold_split(data, config.folds, seed);

    SeedSummary summary;
    summary.seed = seed;
    std::vector<double> base, pooled, noise, signal;
    std::vector<std::vector<RejectionRow>> curves;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const Dataset train_part = data.subset(folds[f].train);
      const Dataset test_part = data.subset(folds[f].test);
      const TrainedModel model = train_all(train_part, train);

      FoldResult fr;
      fr.seed = seed;
      fr.fold = f;
      const auto base_records = predict_dataset(model, test_part, true);
      const auto records = predict_dataset(model, test_part, false);
      fr.baseline = metrics(base_records, data.class_count);
      fr.pooled = metrics(records, data.class_count);
      fr.rejection = rejection_curve(records, data.class_count, config.rejection_ratios, config.mode);
      fr.variance = variance_by_noise_share(model, test_part, synth.signal_dims);

      base.push_back(fr.baseline.balanced_accuracy);
      pooled.push_back(fr.pooled.balanced_accuracy);
      noise.push_back(fr.variance.noise_driven_variance);
      signal.push_back(fr.variance.signal_driven_variance);
      curves.push_back(fr.rejection.rows);
      if (on_fold) on_fold(fr);
      result.folds.push_back(std::move(fr));
    }
    summary.baseline_bacc = mean_of(base);
    summary.pooled_bacc = mean_of(pooled);
    summary.noise_driven_variance = mean_of(noise);
    summary.signal_driven_variance = mean_of(signal);
    for (std::size_t r = 0; r < config.rejection_ratios.size(); ++r) {
      RejectionRow row;
      row.ratio = config.rejection_ratios[r];
      for (const auto& c : curves) {
        const double inv = 1.0 / static_cast<double>(curves.size());
        row.retained += c[r].retained;
        row.f1 += c[r].f1 * inv;
        row.accuracy += c[r].accuracy * inv;
        row.balanced_accuracy += c[r].balanced_accuracy * inv;
      }
      summary.rejection.push_back(row);
    }
    result.seeds.push_back(std::move(summary));
  }
  return result;
}

void write_benchmark_csv(std::ostream& out, const BenchmarkResult& result) {
  out << "seed,fold,baseline_bacc,pooled_bacc,baseline_acc,pooled_acc,noise_var,signal_var\n";
  for (const auto& f : result.folds) {
    out << f.seed << ',' << f.fold << ',' << text::format_real(f.baseline.balanced_accuracy) << ','
        << text::format_real(f.pooled.balanced_accuracy) << ','
        << text::format_real(f.baseline.accuracy) << ',' << text::format_real(f.pooled.accuracy)
        << ',' << text::format_real(f.variance.noise_driven_variance) << ','
        << text::format_real(f.variance.signal_driven_variance) << '\n';
  }
}

}  // namespace cemb
