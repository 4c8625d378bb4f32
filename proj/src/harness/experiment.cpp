#include "sarcaps/experiment.hpp"

#include <fstream>

namespace sarcaps::harness {

namespace {

data::AugmentPolicy policy_of(Augmentation a) {
  if (a == Augmentation::A) return data::AugmentPolicy::A;
  if (a == Augmentation::B) return data::AugmentPolicy::B;
  return data::AugmentPolicy::none;
}

}  // namespace

std::vector<data::Sample> load_split(const data::Manifest& manifest, data::Split split, const TrainConfig& config) {
  std::vector<std::size_t> indices;
  for (std::size_t i : data::select_polarization(manifest, config.mode, split)) {
    const auto& r = manifest.records[i];
    if (r.synthetic && !(split == data::Split::train && config.augmentation == Augmentation::gan)) continue;
    indices.push_back(i);
  }
  auto samples = data::load_samples(manifest, indices, config.input_size());
  if (split == data::Split::train) samples = data::augment(samples, policy_of(config.augmentation), config.seed);
  return samples;
}

Checkpoint model_checkpoint(const Classifier<float>& model, const TrainConfig& config) {
  Checkpoint ck;
  ck.meta = {{"kind", model.kind()}, {"architecture", model.architecture()}, {"train_config", config}};
  ck.tensors = store_parameters(model.parameters());
  return ck;
}

std::unique_ptr<Classifier<float>> load_model(const Checkpoint& checkpoint, TrainConfig* config) {
  if (!checkpoint.meta.contains("train_config")) throw FormatError("checkpoint does not hold a classifier");
  TrainConfig stored;
  from_json(checkpoint.meta.at("train_config"), stored);
  auto model = build_model(stored);
  load_parameters(checkpoint, model->parameters());
  if (config) *config = stored;
  return model;
}

namespace {

nlohmann::json fingerprint(const data::Manifest& manifest, const TrainConfig& config, std::size_t train_n,
                           std::size_t val_n, std::size_t test_n) {
  return {{"train", train_n},
          {"val", val_n},
          {"test", test_n},
          {"records", manifest.records.size()},
          {"mode", data::to_string(config.mode)},
          {"augmentation", to_string(config.augmentation)},
          {"seed", config.seed}};
}

}  // namespace

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

RunSummary run_training(const data::Manifest& manifest, const TrainConfig& config,
                        const std::filesystem::path& out_dir, const EpochCallback& on_epoch) {
  config.validate();
  const auto train_set = prepare(load_split(manifest, data::Split::train, config), config.db);
  const auto val_set = prepare(load_split(manifest, data::Split::val, config), config.db);
  const auto test_set = prepare(load_split(manifest, data::Split::test, config), config.db);
  auto model = build_model(config);

  std::filesystem::create_directories(out_dir);
  RunSummary summary;
  summary.training = train(*model, train_set, val_set, config, on_epoch);
  write_history_csv(out_dir / "history.csv", summary.training.history);
  write_checkpoint(out_dir / "final.ckpt", model_checkpoint(*model, config));
  restore(*model, summary.training.best);
  auto best = model_checkpoint(*model, config);
  best.meta["epoch"] = summary.training.best_epoch;
  write_checkpoint(out_dir / "best.ckpt", best);

  if (test_set.count() > 0) {
    auto report = evaluate(*model, test_set, config.batch_size());
    report.mode = data::to_string(config.mode);
    report.fingerprint = fingerprint(manifest, config, train_set.count(), val_set.count(), test_set.count());
    report.fingerprint["best_epoch"] = summary.training.best_epoch;
    write_json(out_dir / "result.eval.json", report);
    summary.test = report;
  }
  return summary;
}

EvalReport evaluate_manifest(Classifier<float>& model, const data::Manifest& manifest, data::PolarizationMode mode,
                             const data::DbRange& db) {
  const auto indices = data::select_polarization(manifest, mode, data::Split::test);
  std::vector<std::size_t> originals;
  for (std::size_t i : indices) {
    if (!manifest.records[i].synthetic) originals.push_back(i);
  }
  const auto set = prepare(data::load_samples(manifest, originals, model.input_size()), db);
  auto report = evaluate(model, set);
  report.mode = data::to_string(mode);
  report.fingerprint = {{"test", set.count()}, {"records", manifest.records.size()}, {"mode", data::to_string(mode)}};
  return report;
}

}  // namespace sarcaps::harness
