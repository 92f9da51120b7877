#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cemb/confidence.hpp"
#include "cemb/data.hpp"
#include "cemb/kv_config.hpp"
#include "cemb/network.hpp"
#include "cemb/prob_embed.hpp"
#include "cemb/random.hpp"

namespace cemb {

/// Step-decay schedule for one training stage.
struct StageConfig {
  double lr0 = 0.01;
  double decay = 0.1;
  std::size_t period = 50;  // epochs between decays
  std::size_t epochs = 100;
};

/// lr0 * decay^floor(epoch / period).
double lr_schedule(const StageConfig& stage, std::size_t epoch);

/// What the uncertainty head reads.
enum class UncertaintyInput {
  /// The bottleneck output itself (the latent mean).
  latent,
  /// The activation feeding the bottleneck layer.
  pre_latent,
};

/// Training hyperparameters.
///
/// Learning-rate schedules: stage 1 starts at 0.01 and decays x0.1 every 50
/// epochs, stage 2 starts at 0.005 and decays x0.1 every 100 epochs; Adam,
/// batch 32. Widths and epoch counts are sized for the synthetic benchmark
/// (800 samples, 16 inputs); longer stage-2 runs let the head chase per-sample
/// residuals and make the pooling weights noisy.
struct TrainConfig {
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
  StageConfig stage1{0.01, 0.1, 50, 15};
  StageConfig stage2{0.005, 0.1, 100, 10};
  StageConfig stage3{0.01, 0.1, 50, 60};
  double class_weight_exponent = 0.5;  // k in (N / N_c)^k
  std::vector<std::size_t> backbone_hidden{};
  std::size_t latent_dim = 8;
  /// Activation of the bottleneck layer that produces mu.
  Activation latent_activation = Activation::identity;
  std::vector<std::size_t> uncertainty_hidden{64, 64};
  UncertaintyInput uncertainty_input = UncertaintyInput::latent;
  bool stage3_enabled = true;
  /// One batch of the whole training set per epoch (no shuffling).
  bool full_batch = false;

  /// Throws ConfigError on non-positive learning rates, batch_size < 2, etc.
  void validate() const;
  static TrainConfig from_kv(const KvConfig& kv);
  KvConfig to_kv() const;
};

struct EpochRecord {
  int stage = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
};

/// Backbone (feature layers + stage-1 classifier), uncertainty head mapping
/// the bottleneck activation to log-variances, and the classifier applied to
/// confidence-pooled features.
struct TrainedModel {
  DenseNetwork backbone;
  DenseNetwork uncertainty_head;
  DenseNetwork classifier;
  TrainConfig config;
  std::vector<EpochRecord> history;
  int completed_stage = 0;
};

/// Class-stratified batch that always contains a same-label pair.
///
/// Draws ceil(batch_size / 2) classes with replacement, proportional to
/// their frequency among classes with at least two samples, and takes two
/// distinct samples from each; within a class, samples are not reused until
/// its members run out. Odd batch sizes drop the final draw. Throws
/// NoGenuinePairsError if every class is a singleton.
std::vector<std::size_t> sample_batch(std::span<const std::size_t> labels, std::size_t batch_size,
                                      Rng& rng);

/// Stage 1: backbone + classifier with class-weighted cross-entropy.
/// Throws TrainingDivergedError on a non-finite loss.
TrainedModel train_backbone(const Dataset& data, const TrainConfig& config);

/// Stage 2: fits the uncertainty head on the mean pair loss over in-batch
/// genuine pairs. The backbone and classifier are left bit-identical.
TrainedModel train_uncertainty(TrainedModel model, const Dataset& data);

/// Stage 3: re-fits the classifier on confidence-pooled features with the
/// backbone and uncertainty head frozen. A no-op when stage3_enabled is off.
TrainedModel finetune_classifier(TrainedModel model, const Dataset& data);

/// Stages 1-3 in order.
TrainedModel train_all(const Dataset& data, const TrainConfig& config);

/// Latent mean and the uncertainty head's input for one cached backbone pass.
struct BottleneckFeatures {
  Vector mu;
  Vector head_input;
};
BottleneckFeatures bottleneck_features(const TrainedModel& model, const ForwardCache& cache);

/// Latent Gaussian for one input: mean from the backbone bottleneck,
/// clamped log-variance from the uncertainty head.
GaussianEmbedding embed(const TrainedModel& model, std::span<const double> x);

/// Pooled, propagated prediction through the classifier.
PredictionRecord predict(const TrainedModel& model, std::span<const double> x,
                         std::optional<std::size_t> true_label = std::nullopt,
                         std::size_t sample_id = 0, HeadMode mode = HeadMode::strict);

/// Stage-1 prediction: plain backbone scores with zero score variance.
PredictionRecord predict_baseline(const TrainedModel& model, std::span<const double> x,
                                  std::optional<std::size_t> true_label = std::nullopt,
                                  std::size_t sample_id = 0);

/// Predictions for every row, sample_id = row index.
std::vector<PredictionRecord> predict_dataset(const TrainedModel& model, const Dataset& data,
                                              bool baseline = false);

}  // namespace cemb
