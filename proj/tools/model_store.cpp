#include "model_store.hpp"

#include <fstream>
#include <string>

#include "cemb/checkpoint.hpp"
#include "cemb/errors.hpp"
#include "cemb/kv_config.hpp"
#include "cemb/text.hpp"

namespace cemb::cli {

namespace fs = std::filesystem;

void write_history_csv(const fs::path& path, std::span<const EpochRecord> history) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "stage,epoch,lr,loss\n";
  for (const auto& h : history) {
    out << h.stage << ',' << h.epoch << ',' << text::format_real(h.lr) << ','
        << text::format_real(h.loss) << '\n';
  }
}

std::vector<EpochRecord> read_history_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("missing " + path.string());
  std::vector<EpochRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    if (++lineno == 1) continue;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    EpochRecord r;
    std::size_t stage = 0;
    if (f.size() != 4 || !text::parse_size(f[0], stage) || !text::parse_size(f[1], r.epoch) ||
        !text::parse_real(f[2], r.lr) || !text::parse_real(f[3], r.loss)) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": malformed history row");
    }
    r.stage = static_cast<int>(stage);
    out.push_back(r);
  }
  return out;
}

void save_model(const TrainedModel& model, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / kConfigFile);
    model.config.to_kv().write(cfg);
  }
  save_checkpoint(model.backbone, dir / kBackboneFile);
  save_checkpoint(model.uncertainty_head, dir / kUncertaintyFile);
  save_checkpoint(model.classifier, dir / kClassifierFile);
  write_history_csv(dir / kHistoryFile, model.history);
}

TrainedModel load_model(const fs::path& dir, int min_stage) {
  const fs::path manifest = dir / kManifestFile;
  if (!fs::exists(manifest) || !fs::exists(dir / kBackboneFile)) {
    throw DependencyError("no stage-1 model in " + dir.string() + " (run `cemb train --stage 1` first)");
  }
  const KvConfig m = KvConfig::load(manifest);
  const int stage = static_cast<int>(m.size("completed_stage", 0));
  if (stage < min_stage) {
    throw DependencyError("model in " + dir.string() + " has completed stage " +
                          std::to_string(stage) + " but stage " + std::to_string(min_stage) +
                          " is required");
  }
  TrainedModel model;
  model.config = TrainConfig::from_kv(KvConfig::load(dir / kConfigFile));
  model.backbone = load_checkpoint(dir / kBackboneFile);
  model.uncertainty_head = load_checkpoint(dir / kUncertaintyFile);
  model.classifier = load_checkpoint(dir / kClassifierFile);
  model.history = read_history_csv(dir / kHistoryFile);
  model.completed_stage = stage;
  return model;
}

}  // namespace cemb::cli
