#pragma once

// On-disk layout of a model directory written by `cemb train`:
//   train_config.txt   config snapshot (key = value)
//   backbone.ckpt, uncertainty.ckpt, classifier.ckpt
//   loss_history.csv   stage,epoch,lr,loss
//   manifest.txt       run manifest; completed_stage lives here

#include <filesystem>
#include <span>
#include <vector>

#include "cemb/train.hpp"

namespace cemb::cli {

inline constexpr const char* kConfigFile = "train_config.txt";
inline constexpr const char* kBackboneFile = "backbone.ckpt";
inline constexpr const char* kUncertaintyFile = "uncertainty.ckpt";
inline constexpr const char* kClassifierFile = "classifier.ckpt";
inline constexpr const char* kHistoryFile = "loss_history.csv";
inline constexpr const char* kManifestFile = "manifest.txt";

void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history);
std::vector<EpochRecord> read_history_csv(const std::filesystem::path& path);

/// Writes config snapshot, checkpoints and loss history.
void save_model(const TrainedModel& model, const std::filesystem::path& dir);

/// Throws DependencyError when the directory holds no model that has
/// completed at least `min_stage`.
TrainedModel load_model(const std::filesystem::path& dir, int min_stage);

}  // namespace cemb::cli
