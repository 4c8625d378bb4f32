#pragma once

// Manifest-driven training runs shared by the CLI and the acceptance suite.

#include <filesystem>
#include <memory>
#include <vector>

#include "sarcaps/checkpoint.hpp"
#include "sarcaps/data.hpp"
#include "sarcaps/harness.hpp"

namespace sarcaps::harness {

/// Samples of `split` under config.mode at the model input size, in manifest
/// order. GAN records join the train split only with Augmentation::gan;
/// policies A and B expand the train split with flips and rotations.
std::vector<data::Sample> load_split(const data::Manifest& manifest, data::Split split,
                                     const TrainConfig& config);

/// Model parameters plus the full training configuration.
Checkpoint model_checkpoint(const Classifier<float>& model, const TrainConfig& config);
/// Rebuilds the classifier stored by model_checkpoint; `config` receives the
/// stored configuration when non-null.
std::unique_ptr<Classifier<float>> load_model(const Checkpoint& checkpoint, TrainConfig* config = nullptr);

struct RunSummary {
  TrainResult training;
  std::optional<EvalReport> test;  // absent without a test split
};

/// Trains on the train split, selects on val, and writes into `out_dir`:
/// history.csv, best.ckpt, final.ckpt and, with a test split, result.eval.json
/// scored with the best parameters.
RunSummary run_training(const data::Manifest& manifest, const TrainConfig& config,
                        const std::filesystem::path& out_dir, const EpochCallback& on_epoch = {});

/// Scores `model` on the test split of `manifest` under `mode`.
EvalReport evaluate_manifest(Classifier<float>& model, const data::Manifest& manifest,
                             data::PolarizationMode mode, const data::DbRange& db);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace sarcaps::harness
