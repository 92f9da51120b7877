#include "cemb/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cemb/errors.hpp"
#include "cemb/losses.hpp"
#include "cemb/optimizer.hpp"
#include "cemb/text.hpp"

namespace cemb {
namespace {

void validate_stage(const StageConfig& s, const char* name) {
  const std::string n(name);
  if (!(s.lr0 > 0.0) || !std::isfinite(s.lr0)) throw ConfigError(n + ".lr0 must be > 0");
  if (!(s.decay > 0.0 && s.decay <= 1.0)) throw ConfigError(n + ".decay must lie in (0, 1]");
  if (s.period == 0) throw ConfigError(n + ".period must be >= 1");
}

StageConfig stage_from_kv(const KvConfig& kv, const std::string& prefix, StageConfig s) {
  s.lr0 = kv.real(prefix + ".lr0", s.lr0);
  s.decay = kv.real(prefix + ".decay", s.decay);
  s.period = kv.size(prefix + ".period", s.period);
  s.epochs = kv.size(prefix + ".epochs", s.epochs);
  return s;
}

void stage_to_kv(KvConfig& kv, const std::string& prefix, const StageConfig& s) {
  kv.set(prefix + ".lr0", text::format_real(s.lr0));
  kv.set(prefix + ".decay", text::format_real(s.decay));
  kv.set(prefix + ".period", std::to_string(s.period));
  kv.set(prefix + ".epochs", std::to_string(s.epochs));
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

void check_finite(double loss, int stage, std::size_t epoch) {
  if (!std::isfinite(loss)) {
    throw TrainingDivergedError("stage " + std::to_string(stage) + " diverged at epoch " +
                                std::to_string(epoch) + " (non-finite loss)");
  }
}

/// Head layers of the backbone as a stand-alone network.
DenseNetwork head_network(const DenseNetwork& backbone) {
  const auto head = backbone.head();
  if (head.empty()) return DenseNetwork();
  return DenseNetwork(std::vector<Layer>(head.begin(), head.end()), head.size() - 1);
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                    bool full_batch, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (full_batch) return {order};
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

/// Mini-batch Adam on mean class-weighted cross-entropy.
void fit_weighted_ce(DenseNetwork& net, const RealMatrix& inputs,
                     std::span<const std::size_t> labels, const ClassWeights& weights,
                     const StageConfig& stage, int stage_id, const TrainConfig& config,
                     Rng& rng, std::vector<EpochRecord>& history) {
  Adam adam(net);
  const std::size_t n = labels.size();
  for (std::size_t epoch = 0; epoch < stage.epochs; ++epoch) {
    const double lr = lr_schedule(stage, epoch);
    double epoch_loss = 0.0;
    for (const auto& batch : epoch_batches(n, config.batch_size, config.full_batch, rng)) {
      Gradients grad = Gradients::zeros_like(net);
      double batch_loss = 0.0;
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (std::size_t idx : batch) {
        const ForwardCache cache = forward(net, inputs.row(idx));
        const WeightedCeResult ce = weighted_ce_from_scores(cache.scores(), labels[idx], weights);
        batch_loss += ce.loss;
        grad.accumulate(backward(net, cache, ce.grad_scores), inv);
      }
      check_finite(batch_loss, stage_id, epoch);
      epoch_loss += batch_loss;
      adam.step(net, grad, lr);
    }
    history.push_back({stage_id, epoch, lr, epoch_loss / static_cast<double>(n)});
  }
}

}  // namespace

double lr_schedule(const StageConfig& stage, std::size_t epoch) {
  const auto steps = static_cast<double>(epoch / std::max<std::size_t>(stage.period, 1));
  return stage.lr0 * std::pow(stage.decay, steps);
}

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  validate_stage(stage1, "stage1");
  validate_stage(stage2, "stage2");
  validate_stage(stage3, "stage3");
  if (!(class_weight_exponent >= 0.0) || !std::isfinite(class_weight_exponent)) {
    throw ConfigError("k must be finite and >= 0");
  }
  if (latent_dim == 0) throw ConfigError("latent_dim must be >= 1");
  for (std::size_t w : backbone_hidden) {
    if (w == 0) throw ConfigError("backbone_hidden widths must be >= 1");
  }
  for (std::size_t w : uncertainty_hidden) {
    if (w == 0) throw ConfigError("uncertainty_hidden widths must be >= 1");
  }
}

TrainConfig TrainConfig::from_kv(const KvConfig& kv) {
  TrainConfig c;
  c.seed = kv.u64("seed", c.seed);
  c.batch_size = kv.size("batch_size", c.batch_size);
  c.stage1 = stage_from_kv(kv, "stage1", c.stage1);
  c.stage2 = stage_from_kv(kv, "stage2", c.stage2);
  c.stage3 = stage_from_kv(kv, "stage3", c.stage3);
  c.class_weight_exponent = kv.real("k", c.class_weight_exponent);
  c.backbone_hidden = kv.sizes("backbone_hidden", c.backbone_hidden);
  c.latent_dim = kv.size("latent_dim", c.latent_dim);
  if (const auto act = kv.raw("latent_activation")) {
    if (*act == "identity") {
      c.latent_activation = Activation::identity;
    } else if (*act == "relu") {
      c.latent_activation = Activation::relu;
    } else {
      throw ConfigError("latent_activation must be 'identity' or 'relu'");
    }
  }
  c.uncertainty_hidden = kv.sizes("uncertainty_hidden", c.uncertainty_hidden);
  if (const auto input = kv.raw("uncertainty_input")) {
    if (*input == "latent") {
      c.uncertainty_input = UncertaintyInput::latent;
    } else if (*input == "pre_latent") {
      c.uncertainty_input = UncertaintyInput::pre_latent;
    } else {
      throw ConfigError("uncertainty_input must be 'latent' or 'pre_latent'");
    }
  }
  c.stage3_enabled = kv.boolean("stage3_enabled", c.stage3_enabled);
  c.full_batch = kv.boolean("full_batch", c.full_batch);
  kv.reject_unused();
  c.validate();
  return c;
}

KvConfig TrainConfig::to_kv() const {
  KvConfig kv;
  kv.set("seed", std::to_string(seed));
  kv.set("batch_size", std::to_string(batch_size));
  stage_to_kv(kv, "stage1", stage1);
  stage_to_kv(kv, "stage2", stage2);
  stage_to_kv(kv, "stage3", stage3);
  kv.set("k", text::format_real(class_weight_exponent));
  kv.set("backbone_hidden", join(backbone_hidden));
  kv.set("latent_dim", std::to_string(latent_dim));
  kv.set("latent_activation", to_string(latent_activation));
  kv.set("uncertainty_hidden", join(uncertainty_hidden));
  kv.set("uncertainty_input",
         uncertainty_input == UncertaintyInput::latent ? "latent" : "pre_latent");
  kv.set("stage3_enabled", stage3_enabled ? "true" : "false");
  kv.set("full_batch", full_batch ? "true" : "false");
  return kv;
}

std::vector<std::size_t> sample_batch(std::span<const std::size_t> labels, std::size_t batch_size,
                                      Rng& rng) {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  std::size_t classes = 0;
  for (std::size_t l : labels) classes = std::max(classes, l + 1);
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

  std::vector<std::size_t> eligible;
  std::vector<double> cumulative;
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (members[c].size() < 2) continue;
    eligible.push_back(c);
    total += static_cast<double>(members[c].size());
    cumulative.push_back(total);
  }
  if (eligible.empty()) throw NoGenuinePairsError("every class is a singleton");

  // Unused members per class, refilled when fewer than two remain.
  std::vector<std::vector<std::size_t>> pool(classes);
  std::vector<std::size_t> batch;
  const std::size_t draws = (batch_size + 1) / 2;
  for (std::size_t d = 0; d < draws; ++d) {
    const double u = rng.uniform() * total;
    const std::size_t pick = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    const std::size_t c = eligible[std::min(pick, eligible.size() - 1)];
    auto& avail = pool[c];
    if (avail.size() < 2) avail = members[c];
    for (int take = 0; take < 2; ++take) {
      const std::size_t k = rng.index(avail.size());
      batch.push_back(avail[k]);
      avail[k] = avail.back();
      avail.pop_back();
    }
  }
  batch.resize(batch_size);
  return batch;
}

TrainedModel train_backbone(const Dataset& data, const TrainConfig& config) {
  config.validate();
  if (data.size() == 0) throw ConfigError("training set is empty");
  if (data.class_count < 2) throw ConfigError("training needs at least two classes");
  const ClassWeights weights = compute_class_weights(data.class_counts,
                                                     config.class_weight_exponent);

  std::vector<std::size_t> widths{data.width()};
  std::vector<Activation> acts;
  for (std::size_t w : config.backbone_hidden) {
    widths.push_back(w);
    acts.push_back(Activation::relu);
  }
  widths.push_back(config.latent_dim);
  acts.push_back(config.latent_activation);
  widths.push_back(data.class_count);
  acts.push_back(Activation::identity);

  Rng init = Rng::stream(config.seed, "init");
  TrainedModel model;
  model.config = config;
  model.backbone = DenseNetwork::initialized(widths, acts, config.backbone_hidden.size(), init);

  Rng batching = Rng::stream(config.seed, "batching");
  fit_weighted_ce(model.backbone, data.features, data.labels, weights, config.stage1, 1, config,
                  batching, model.history);

  const std::size_t latent = config.latent_dim;
  std::size_t head_in = latent;
  if (config.uncertainty_input == UncertaintyInput::pre_latent) {
    head_in = config.backbone_hidden.empty() ? data.width() : config.backbone_hidden.back();
  }
  std::vector<std::size_t> uwidths{head_in};
  std::vector<Activation> uacts;
  for (std::size_t w : config.uncertainty_hidden) {
    uwidths.push_back(w);
    uacts.push_back(Activation::relu);
  }
  uwidths.push_back(latent);
  uacts.push_back(Activation::identity);
  Rng uinit = Rng::stream(config.seed, "init-uncertainty");
  model.uncertainty_head = DenseNetwork::initialized(uwidths, uacts, uacts.size() - 1, uinit);
  model.classifier = head_network(model.backbone);
  model.completed_stage = 1;
  return model;
}

TrainedModel train_uncertainty(TrainedModel model, const Dataset& data) {
  if (model.completed_stage < 1) throw DependencyError("stage 2 needs a stage-1 model");
  const TrainConfig& config = model.config;
  DenseNetwork& head = model.uncertainty_head;
  if (head.output_width() != model.backbone.latent_width()) {
    throw ShapeError("uncertainty head output width does not match the latent width");
  }

  // The backbone is frozen, so every latent mean is computed once.
  std::vector<BottleneckFeatures> features;
  features.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    features.push_back(bottleneck_features(model, forward(model.backbone, data.row(i))));
  }

  Adam adam(head);
  Rng batching = Rng::stream(config.seed, "pair-batching");
  const std::size_t n = data.size();
  const std::size_t batches_per_epoch =
      config.full_batch ? 1 : std::max<std::size_t>(1, (n + config.batch_size - 1) / config.batch_size);

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.stage2.epochs; ++epoch) {
    const double lr = lr_schedule(config.stage2, epoch);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const std::vector<std::size_t> batch =
          config.full_batch ? all : sample_batch(data.labels, config.batch_size, batching);
      std::vector<std::size_t> batch_labels;
      std::vector<ForwardCache> caches;
      std::vector<GaussianEmbedding> embeddings;
      batch_labels.reserve(batch.size());
      caches.reserve(batch.size());
      embeddings.reserve(batch.size());
      for (std::size_t idx : batch) {
        batch_labels.push_back(data.labels[idx]);
        caches.push_back(forward(head, features[idx].head_input));
        embeddings.emplace_back(features[idx].mu, caches.back().scores());
      }
      const GenuinePairSet pairs = enumerate_genuine_pairs(batch_labels);
      if (pairs.empty()) throw NoGenuinePairsError("batch without genuine pairs");
      const PairLossResult pl = pair_loss(embeddings, pairs);
      check_finite(pl.loss, 2, epoch);
      epoch_loss += pl.loss;

      Gradients grad = Gradients::zeros_like(head);
      for (std::size_t k = 0; k < batch.size(); ++k) {
        Vector upstream = pl.grad_log_var[k];
        const Vector& raw = caches[k].scores();
        // The clamp has zero slope outside [kLogVarMin, kLogVarMax].
        for (std::size_t l = 0; l < upstream.size(); ++l) {
          if (raw[l] < kLogVarMin || raw[l] > kLogVarMax) upstream[l] = 0.0;
        }
        grad.accumulate(backward(head, caches[k], upstream));
      }
      adam.step(head, grad, lr);
    }
    model.history.push_back({2, epoch, lr, epoch_loss / static_cast<double>(batches_per_epoch)});
  }
  model.completed_stage = 2;
  return model;
}

TrainedModel finetune_classifier(TrainedModel model, const Dataset& data) {
  if (model.completed_stage < 2) throw DependencyError("stage 3 needs a stage-2 model");
  const TrainConfig& config = model.config;
  if (!config.stage3_enabled) return model;
  const ClassWeights weights = compute_class_weights(data.class_counts,
                                                     config.class_weight_exponent);
  RealMatrix pooled(data.size(), model.backbone.latent_width());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const PooledFeature p = confidence_pool(embed(model, data.row(i)));
    std::copy(p.mu_hat.begin(), p.mu_hat.end(), pooled.row(i).begin());
  }
  Rng batching = Rng::stream(config.seed, "finetune-batching");
  fit_weighted_ce(model.classifier, pooled, data.labels, weights, config.stage3, 3, config,
                  batching, model.history);
  model.completed_stage = 3;
  return model;
}

TrainedModel train_all(const Dataset& data, const TrainConfig& config) {
  TrainedModel m = train_backbone(data, config);
  m = train_uncertainty(std::move(m), data);
  return finetune_classifier(std::move(m), data);
}

BottleneckFeatures bottleneck_features(const TrainedModel& model, const ForwardCache& cache) {
  BottleneckFeatures f;
  f.mu = latent(model.backbone, cache);
  const std::size_t b = model.backbone.bottleneck_index();
  if (model.config.uncertainty_input == UncertaintyInput::latent) {
    f.head_input = f.mu;
  } else {
    f.head_input = b == 0 ? cache.input : cache.activations[b - 1];
  }
  if (f.head_input.size() != model.uncertainty_head.input_width()) {
    throw ShapeError("uncertainty head input width does not match the backbone");
  }
  return f;
}

GaussianEmbedding embed(const TrainedModel& model, std::span<const double> x) {
  BottleneckFeatures f = bottleneck_features(model, forward(model.backbone, x));
  Vector log_var = forward(model.uncertainty_head, f.head_input).scores();
  return GaussianEmbedding(std::move(f.mu), std::move(log_var));
}

PredictionRecord predict(const TrainedModel& model, std::span<const double> x,
                         std::optional<std::size_t> true_label, std::size_t sample_id,
                         HeadMode mode) {
  const PooledFeature pooled = confidence_pool(embed(model, x));
  PredictionRecord r = propagate_network(pooled, model.classifier.layers(), mode);
  r.true_label = true_label;
  r.sample_id = sample_id;
  return r;
}

PredictionRecord predict_baseline(const TrainedModel& model, std::span<const double> x,
                                  std::optional<std::size_t> true_label, std::size_t sample_id) {
  Vector scores = forward(model.backbone, x).scores();
  Vector var(scores.size(), 0.0);
  return make_prediction(std::move(scores), std::move(var), true_label, sample_id);
}

std::vector<PredictionRecord> predict_dataset(const TrainedModel& model, const Dataset& data,
                                              bool baseline) {
  if (data.width() != model.backbone.input_width()) {
    throw SchemaError("dataset has " + std::to_string(data.width()) +
                      " features but the model expects " +
                      std::to_string(model.backbone.input_width()));
  }
  if (data.class_count != model.classifier.output_width()) {
    throw SchemaError("dataset has " + std::to_string(data.class_count) +
                      " classes but the model scores " +
                      std::to_string(model.classifier.output_width()));
  }
  std::vector<PredictionRecord> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.push_back(baseline ? predict_baseline(model, data.row(i), data.labels[i], i)
                           : predict(model, data.row(i), data.labels[i], i));
  }
  return out;
}

}  // namespace cemb
