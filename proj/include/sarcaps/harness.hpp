#pragma once

// Training and evaluation loops, experiment configuration, checkpoints and
// result tables.

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sarcaps/capsnet.hpp"
#include "sarcaps/cnn.hpp"
#include "sarcaps/data.hpp"
#include "sarcaps/model.hpp"
#include "sarcaps/optim.hpp"

namespace sarcaps::harness {

enum class Augmentation { none, A, B, gan };
enum class DecayUnit { epoch, step };

std::string to_string(Augmentation a);
Augmentation parse_augmentation(const std::string& text);

struct TrainConfig {
  std::string model = "capsnet";  // capsnet | cnn
  cnn::Head head = cnn::Head::S;
  std::size_t epochs = 50;
  std::optional<std::size_t> batch;  // default: 100 for capsnet, 32 for cnn
  AdamConfig optimizer;
  std::optional<double> lr_decay;  // default: 0.9 for capsnet, 1.0 for cnn
  DecayUnit decay_per = DecayUnit::epoch;
  std::uint64_t seed = 1;
  data::PolarizationMode mode = data::PolarizationMode::VH;
  Augmentation augmentation = Augmentation::none;
  data::DbRange db;
  caps::CapsNetConfig capsnet = caps::CapsNetConfig::desk();
  cnn::CnnConfig cnn = cnn::CnnConfig::desk(cnn::Head::S);

  std::size_t batch_size() const;
  double decay() const;
  std::size_t input_size() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing fields keep their current values, so a partial document layers
/// over defaults.
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Builds the classifier selected by `config`, initialised from config.seed.
std::unique_ptr<Classifier<float>> build_model(const TrainConfig& config);

/// Tiles in dB-normalised [0, 1] form, ready for batching.
struct PreparedSet {
  std::size_t size = 0;  // tile side
  std::vector<std::vector<float>> images;
  std::vector<int> labels;
  std::vector<std::string> ids;

  std::size_t count() const { return labels.size(); }
};

PreparedSet prepare(const std::vector<data::Sample>& samples, const data::DbRange& db);

/// Stacks the listed samples into [N, S, S, 1].
Tensor<float> make_batch(const PreparedSet& set, const std::vector<std::size_t>& order, std::size_t begin,
                         std::size_t end, std::vector<int>* labels);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0, train_acc = 0;
  double val_loss = 0, val_acc = 0;  // NaN without a validation split
  double lr = 0;
};

struct ParameterSnapshot {
  std::vector<std::string> names;
  std::vector<Shape> shapes;
  std::vector<std::vector<float>> values;
};

ParameterSnapshot snapshot(const Classifier<float>& model);
void restore(Classifier<float>& model, const ParameterSnapshot& snap);

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  ParameterSnapshot best;
};

using EpochCallback = std::function<void(const EpochRecord&)>;
using StopPredicate = std::function<bool(const EpochRecord&)>;

/// Adam over shuffled mini-batches (last short batch kept), learning rate
/// decayed per epoch or per step. Tracks the best validation accuracy epoch
/// (the last epoch when no validation data is given). `stop` may end training
/// early after any epoch.
TrainResult train(Classifier<float>& model, const PreparedSet& train_set, const PreparedSet& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {}, const StopPredicate& stop = {});

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

/// Mean loss and accuracy without touching parameters.
std::pair<double, double> loss_and_accuracy(Classifier<float>& model, const PreparedSet& set,
                                            std::size_t batch);

struct EvalReport {
  std::string architecture;
  std::string mode;
  double accuracy = 0;
  std::array<std::array<std::size_t, data::kNumClasses>, data::kNumClasses> confusion{};  // [true][pred]
  std::array<double, data::kNumClasses> precision{}, recall{};
  std::size_t total = 0;
  nlohmann::json fingerprint;
};

EvalReport score(const std::vector<int>& labels, const std::vector<int>& predictions);
EvalReport evaluate(Classifier<float>& model, const PreparedSet& test_set, std::size_t batch = 32);

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

/// "0.65091"
std::string format_accuracy(double accuracy);

struct ReportTable {
  std::vector<std::string> columns;  // VH, VV, VH-VV
  std::vector<std::string> rows;     // architectures in first-seen order
  std::map<std::pair<std::string, std::string>, double> cells;
};

ReportTable build_report(const std::vector<EvalReport>& results);
std::string render_csv(const ReportTable& table);
std::string render_text(const ReportTable& table);
/// Reads every *.eval.json EvalReport under `dir` (recursively), sorted by path.
std::vector<EvalReport> load_results(const std::filesystem::path& dir);

/// Mode label used as a report column.
std::string mode_column(data::PolarizationMode mode);

}  // namespace sarcaps::harness
