// cemb: synthetic data, staged training, evaluation with rejection.
//
// Exit codes: 0 success, 1 runtime or numeric failure, 2 usage or config error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cemb/checksum.hpp"
#include "cemb/errors.hpp"
#include "cemb/eval.hpp"
#include "cemb/experiment.hpp"
#include "cemb/kv_config.hpp"
#include "cemb/text.hpp"
#include "cemb/train.hpp"
#include "model_store.hpp"

namespace fs = std::filesystem;
using namespace cemb;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string checksum_of(const fs::path& p) { return to_hex(file_checksum(p)); }

void write_kv(const KvConfig& kv, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  kv.write(out);
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  fn(out);
}

void add_config(KvConfig& manifest, const KvConfig& config) {
  for (const auto& [k, v] : config.entries()) manifest.set("config." + k, v);
}

// --- synth-data ------------------------------------------------------------

struct SynthArgs {
  std::string config;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  const auto t0 = Clock::now();
  const SynthConfig cfg = SynthConfig::from_kv(KvConfig::load(a.config));
  const Dataset data = synth_generate(cfg);
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_dataset(data, out);

  KvConfig m;
  m.set("command", "synth-data");
  m.set("config", a.config);
  m.set("seed", std::to_string(cfg.seed));
  m.set("out", a.out);
  m.set("rows", std::to_string(data.size()));
  m.set("out_checksum", checksum_of(out));
  add_config(m, cfg.to_kv());
  m.set("wall_clock_seconds", text::format_real(seconds_since(t0)));
  write_kv(m, fs::path(a.out + ".manifest.txt"));
  std::cout << "wrote " << data.size() << " rows to " << a.out << '\n';
  return 0;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out_dir;
  std::string stage = "all";
};

/// Stage-1 classifier head recovered from the backbone.
DenseNetwork backbone_head(const DenseNetwork& backbone) {
  const auto head = backbone.head();
  return DenseNetwork(std::vector<Layer>(head.begin(), head.end()), head.size() - 1);
}

int run_train(const TrainArgs& a) {
  const auto t0 = Clock::now();
  const KvConfig config_kv = KvConfig::load(a.config);
  const TrainConfig config = TrainConfig::from_kv(config_kv);
  const fs::path dir(a.out_dir);
  const Dataset data = load_dataset(a.data);

  TrainedModel model;
  if (a.stage == "1" || a.stage == "all") {
    model = a.stage == "all" ? train_all(data, config) : train_backbone(data, config);
  } else {
    const int stage = a.stage == "2" ? 2 : 3;
    model = cli::load_model(dir, stage - 1);
    if (model.config.to_kv().entries() != config.to_kv().entries()) {
      throw ConfigError("config " + a.config + " differs from the one the stage-1 model in " +
                        a.out_dir + " was trained with");
    }
    if (data.width() != model.backbone.input_width()) {
      throw SchemaError("dataset has " + std::to_string(data.width()) +
                        " features but the model expects " +
                        std::to_string(model.backbone.input_width()));
    }
    // Re-running an earlier stage discards what later stages produced.
    std::erase_if(model.history, [&](const EpochRecord& r) { return r.stage >= stage; });
    if (stage == 2) {
      model.classifier = backbone_head(model.backbone);
      model.completed_stage = 1;
      model = train_uncertainty(std::move(model), data);
    } else {
      model.completed_stage = 2;
      model = finetune_classifier(std::move(model), data);
    }
  }
  cli::save_model(model, dir);

  KvConfig m;
  m.set("command", "train");
  m.set("stage", a.stage);
  m.set("completed_stage", std::to_string(model.completed_stage));
  m.set("config", a.config);
  m.set("data", a.data);
  m.set("data_checksum", checksum_of(a.data));
  m.set("seed", std::to_string(config.seed));
  m.set("out_dir", a.out_dir);
  for (const char* f : {cli::kBackboneFile, cli::kUncertaintyFile, cli::kClassifierFile,
                        cli::kHistoryFile, cli::kConfigFile}) {
    m.set(std::string("checksum.") + f, checksum_of(dir / f));
  }
  add_config(m, config.to_kv());
  m.set("wall_clock_seconds", text::format_real(seconds_since(t0)));
  write_kv(m, dir / cli::kManifestFile);
  std::cout << "completed stage " << model.completed_stage << " in " << a.out_dir << '\n';
  return 0;
}

// --- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string model_dir;
  std::string data;
  std::string out_dir;
  std::vector<double> reject{0.0, 0.05, 0.10, 0.20};
  std::string mode = "global";
  bool baseline = false;
};

int run_evaluate(const EvaluateArgs& a) {
  const auto t0 = Clock::now();
  const RejectionMode mode = parse_rejection_mode(a.mode);
  const TrainedModel model = cli::load_model(a.model_dir, a.baseline ? 1 : 2);
  const std::size_t classes = model.classifier.output_width();
  const Dataset data = load_dataset(a.data, classes);
  const auto records = predict_dataset(model, data, a.baseline);
  const MetricSummary summary = metrics(records, classes);
  const RejectionCurve curve = rejection_curve(records, classes, a.reject, mode);

  const fs::path out(a.out_dir.empty() ? a.model_dir : a.out_dir);
  fs::create_directories(out);
  write_file(out / "predictions.csv", [&](std::ostream& o) { write_predictions_csv(o, records); });
  write_file(out / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, summary); });
  write_file(out / "per_class.csv", [&](std::ostream& o) { write_per_class_csv(o, summary); });
  write_file(out / "rejection.csv", [&](std::ostream& o) { write_rejection_csv(o, curve); });
  for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';

  KvConfig m;
  m.set("command", "evaluate");
  m.set("model_dir", a.model_dir);
  m.set("data", a.data);
  m.set("data_checksum", checksum_of(a.data));
  m.set("seed", std::to_string(model.config.seed));
  std::string ratios;
  for (std::size_t i = 0; i < a.reject.size(); ++i) {
    ratios += (i ? "," : "") + text::format_real(a.reject[i]);
  }
  m.set("reject", ratios);
  m.set("mode", to_string(mode));
  m.set("baseline", a.baseline ? "true" : "false");
  for (const char* f : {cli::kBackboneFile, cli::kUncertaintyFile, cli::kClassifierFile}) {
    m.set(std::string("checksum.") + f, checksum_of(fs::path(a.model_dir) / f));
  }
  for (const char* f : {"predictions.csv", "metrics.csv", "per_class.csv", "rejection.csv"}) {
    m.set(std::string("checksum.") + f, checksum_of(out / f));
  }
  m.set("wall_clock_seconds", text::format_real(seconds_since(t0)));
  write_kv(m, out / "evaluate_manifest.txt");

  std::printf("n=%zu  F1=%.4f  ACC=%.4f  BACC=%.4f  meanAUC=%.4f\n", summary.count,
              summary.f1_macro, summary.accuracy, summary.balanced_accuracy, summary.mean_auc);
  for (const auto& r : curve.rows) {
    std::printf("reject %.2f  kept %zu  ACC=%.4f  BACC=%.4f\n", r.ratio, r.retained, r.accuracy,
                r.balanced_accuracy);
  }
  return 0;
}

// --- benchmark -------------------------------------------------------------

struct BenchmarkArgs {
  std::string config;
  std::string out;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t folds = 5;
};

int run_benchmark_cmd(const BenchmarkArgs& a) {
  BenchmarkConfig b;
  if (!a.config.empty()) b.train = TrainConfig::from_kv(KvConfig::load(a.config));
  b.seeds = a.seeds;
  b.folds = a.folds;
  const BenchmarkResult r = run_benchmark(b, [](const FoldResult& f) {
    std::printf("seed %llu fold %zu  baseline BACC %.4f  pooled BACC %.4f\n",
                static_cast<unsigned long long>(f.seed), f.fold, f.baseline.balanced_accuracy,
                f.pooled.balanced_accuracy);
    std::fflush(stdout);
  });
  if (!a.out.empty()) write_file(a.out, [&](std::ostream& o) { write_benchmark_csv(o, r); });
  double base = 0, pooled = 0;
  for (const auto& s : r.seeds) {
    base += s.baseline_bacc;
    pooled += s.pooled_bacc;
  }
  const double n = static_cast<double>(r.seeds.size());
  std::printf("mean BACC  baseline %.4f  pooled %.4f\n", base / n, pooled / n);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-embedding classifier with uncertainty-based rejection"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth-data", "generate a synthetic dataset");
  synth_cmd->add_option("--config", synth.config, "generator config (key = value)")
      ->required()
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth.out, "output CSV")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train one stage or all stages");
  train_cmd->add_option("--data", train.data, "training CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--config", train.config, "training config (key = value)")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--out-dir", train.out_dir, "model directory")->required();
  train_cmd->add_option("--stage", train.stage, "1, 2, 3 or all")
      ->check(CLI::IsMember({"1", "2", "3", "all"}))
      ->capture_default_str();

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "score a dataset and build rejection curves");
  eval_cmd->add_option("--model-dir", eval.model_dir, "directory written by train")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--data", eval.data, "dataset CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out-dir", eval.out_dir, "output directory (default: the model directory)");
  eval_cmd->add_option("--reject", eval.reject, "rejection ratios, comma-separated")
      ->delimiter(',')
      ->capture_default_str();
  eval_cmd->add_option("--mode", eval.mode, "global or per-class")
      ->check(CLI::IsMember({"global", "per-class"}))
      ->capture_default_str();
  eval_cmd->add_flag("--baseline", eval.baseline, "use stage-1 scores without pooling");

  BenchmarkArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "k-fold synthetic benchmark over several seeds");
  bench_cmd->add_option("--config", bench.config, "training config (default: built-in)")
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--out", bench.out, "per-fold CSV");
  bench_cmd->add_option("--seeds", bench.seeds, "comma-separated seeds")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--folds", bench.folds, "folds per seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    std::cerr << (sub ? sub->help() : app.help());
    return kUsageError;
  }

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*train_cmd) return run_train(train);
    if (*eval_cmd) return run_evaluate(eval);
    if (*bench_cmd) return run_benchmark_cmd(bench);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << '\n';
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsageError;
}
