#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cemb/kv_config.hpp"
#include "cemb/matrix.hpp"

namespace cemb {

/// Feature rows with integer class labels.
struct Dataset {
  RealMatrix features;  // n x D_in
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;
  std::vector<std::size_t> class_counts;
  std::string provenance;

  /// Builds class_counts and checks labels < class_count. With
  /// `require_every_class`, a class without samples is a SchemaError.
  static Dataset make(RealMatrix features, std::vector<std::size_t> labels,
                      std::size_t class_count, std::string provenance,
                      bool require_every_class = true);

  std::size_t size() const { return labels.size(); }
  std::size_t width() const { return features.cols(); }
  std::span<const double> row(std::size_t i) const { return features.row(i); }

  /// Rows at `indices` in that order; class_count is preserved.
  Dataset subset(std::span<const std::size_t> indices) const;

  /// Compares contents; provenance is ignored.
  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.class_count == b.class_count && a.labels == b.labels &&
           a.class_counts == b.class_counts && a.features == b.features;
  }
};

/// Class-imbalanced Gaussian blobs with a block of corruptible "noise" dims.
///
/// Sample of class c: x = center_c + eps, eps_d ~ N(0, noise_scales[d]^2).
/// The first `signal_dims` center coordinates are drawn as
/// separation * N(0, 1); the remaining `noise_dims` are pure noise (center 0).
/// A `corrupted_fraction` subset of samples has its noise-dim scale
/// multiplied by `corruption_multiplier`.
struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t classes = 3;
  std::vector<std::size_t> class_counts{600, 150, 50};
  std::size_t signal_dims = 8;
  std::size_t noise_dims = 8;
  double separation = 0.5;
  /// Per input dim; empty means 1.0 everywhere.
  std::vector<double> noise_scales;
  double corrupted_fraction = 0.3;
  double corruption_multiplier = 5.0;

  std::size_t input_width() const { return signal_dims + noise_dims; }
  /// Throws ConfigError on inconsistent settings.
  void validate() const;

  /// Keys: seed, classes, class_counts, signal_dims, noise_dims, separation,
  /// noise_scales, corrupted_fraction, corruption_multiplier. Unknown keys are rejected.
  static SynthConfig from_kv(const KvConfig& kv);
  KvConfig to_kv() const;
};

struct SyntheticData {
  Dataset dataset;
  /// Per sample: whether its noise dims were inflated.
  std::vector<bool> corrupted;
};

SyntheticData synth_generate_with_mask(const SynthConfig& cfg);
Dataset synth_generate(const SynthConfig& cfg);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified k-fold partition: each class is shuffled and dealt across the
/// folds, so every test fold holds floor or ceil of n_c / k samples of class c.
/// Index lists are sorted. Throws StratificationError if a class has fewer than k samples.
std::vector<Fold> kfold_split(const Dataset& data, std::size_t k, std::uint64_t seed);

/// CSV with header f0,...,f{D-1},label.
void write_dataset_csv(std::ostream& out, const Dataset& data);
/// Throws ParseError (with line number) on malformed input, including an
/// empty file, and SchemaError for a label >= class_count. Without an
/// explicit class_count it is inferred as max label + 1.
Dataset read_dataset_csv(std::istream& in, const std::string& source,
                         std::optional<std::size_t> class_count = std::nullopt);

void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path,
                     std::optional<std::size_t> class_count = std::nullopt);

}  // namespace cemb
