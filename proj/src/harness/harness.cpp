#include "sarcaps/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace sarcaps::harness {

std::string to_string(Augmentation a) {
  switch (a) {
    case Augmentation::none: return "none";
    case Augmentation::A: return "A";
    case Augmentation::B: return "B";
    case Augmentation::gan: return "gan";
  }
  return "?";
}

Augmentation parse_augmentation(const std::string& text) {
  if (text == "none") return Augmentation::none;
  if (text == "A") return Augmentation::A;
  if (text == "B") return Augmentation::B;
  if (text == "gan") return Augmentation::gan;
  throw std::invalid_argument("unknown augmentation '" + text + "' (expected none, A, B or gan)");
}

std::size_t TrainConfig::batch_size() const {
  if (batch) return *batch;
  return model == "capsnet" ? 100 : 32;
}

double TrainConfig::decay() const {
  if (lr_decay) return *lr_decay;
  return model == "capsnet" ? 0.9 : 1.0;
}

std::size_t TrainConfig::input_size() const {
  return model == "capsnet" ? capsnet.input_size : cnn.input_size;
}

void TrainConfig::validate() const {
  if (model != "capsnet" && model != "cnn") throw std::invalid_argument("model must be capsnet or cnn");
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size() == 0) throw std::invalid_argument("batch must be positive");
  const double d = decay();
  if (!(d > 0.0 && d <= 1.0)) throw std::invalid_argument("lr_decay must lie in (0, 1]");
  if (!(optimizer.lr > 0)) throw std::invalid_argument("learning rate must be positive");
  db.validate();
  if (model == "capsnet") {
    capsnet.validate();
  } else {
    cnn.validate();
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{
      {"model", c.model},
      {"head", cnn::to_string(c.head)},
      {"epochs", c.epochs},
      {"batch", c.batch_size()},
      {"optimizer", {{"lr", c.optimizer.lr}, {"beta1", c.optimizer.beta1}, {"beta2", c.optimizer.beta2},
                     {"eps", c.optimizer.eps}}},
      {"lr_decay", c.decay()},
      {"decay_per", c.decay_per == DecayUnit::epoch ? "epoch" : "step"},
      {"seed", c.seed},
      {"mode", data::to_string(c.mode)},
      {"augmentation", to_string(c.augmentation)},
      {"db_min", c.db.min},
      {"db_max", c.db.max},
      {"capsnet", c.capsnet},
      {"cnn", c.cnn},
  };
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.model = j.value("model", c.model);
  if (j.contains("head")) c.head = cnn::parse_head(j.at("head").get<std::string>());
  c.epochs = j.value("epochs", c.epochs);
  if (j.contains("batch")) c.batch = j.at("batch").get<std::size_t>();
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    c.optimizer.lr = o.value("lr", c.optimizer.lr);
    c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
    c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
    c.optimizer.eps = o.value("eps", c.optimizer.eps);
  }
  if (j.contains("lr_decay")) c.lr_decay = j.at("lr_decay").get<double>();
  if (j.contains("decay_per")) {
    const auto unit = j.at("decay_per").get<std::string>();
    if (unit != "epoch" && unit != "step") throw std::invalid_argument("decay_per must be epoch or step");
    c.decay_per = unit == "epoch" ? DecayUnit::epoch : DecayUnit::step;
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("mode")) c.mode = data::parse_mode(j.at("mode").get<std::string>());
  if (j.contains("augmentation")) c.augmentation = parse_augmentation(j.at("augmentation").get<std::string>());
  c.db.min = j.value("db_min", c.db.min);
  c.db.max = j.value("db_max", c.db.max);
  if (j.contains("capsnet")) {
    nlohmann::json merged = c.capsnet;
    merged.merge_patch(j.at("capsnet"));
    c.capsnet = merged.get<caps::CapsNetConfig>();
  }
  if (j.contains("cnn")) {
    nlohmann::json merged = c.cnn;
    merged.merge_patch(j.at("cnn"));
    c.cnn = merged.get<cnn::CnnConfig>();
  }
  c.cnn.head = c.head;
}

std::unique_ptr<Classifier<float>> build_model(const TrainConfig& config) {
  config.validate();
  if (config.model == "capsnet") return std::make_unique<caps::CapsNet<float>>(config.capsnet, config.seed);
  auto cnn_config = config.cnn;
  cnn_config.head = config.head;
  return std::make_unique<cnn::Cnn<float>>(cnn_config, config.seed);
}

PreparedSet prepare(const std::vector<data::Sample>& samples, const data::DbRange& db) {
  PreparedSet set;
  if (samples.empty()) return set;
  set.size = samples.front().tile.height;
  set.images.resize(samples.size());
  for (const auto& s : samples) {
    if (s.tile.height != set.size || s.tile.width != set.size) {
      throw ShapeError("prepare: sample '" + s.id + "' is not " + std::to_string(set.size) + " square");
    }
    set.labels.push_back(s.label);
    set.ids.push_back(s.id);
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(samples.size()); ++i) {
    set.images[static_cast<std::size_t>(i)] = data::normalize_tile(samples[static_cast<std::size_t>(i)].tile, db);
  }
  return set;
}

Tensor<float> make_batch(const PreparedSet& set, const std::vector<std::size_t>& order, std::size_t begin,
                         std::size_t end, std::vector<int>* labels) {
  const std::size_t n = end - begin, pixels = set.size * set.size;
  std::vector<float> values(n * pixels);
  if (labels) labels->resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t idx = order[begin + k];
    std::copy(set.images[idx].begin(), set.images[idx].end(), values.begin() + k * pixels);
    if (labels) (*labels)[k] = set.labels[idx];
  }
  return Tensor<float>({n, set.size, set.size, 1}, std::move(values));
}

ParameterSnapshot snapshot(const Classifier<float>& model) {
  ParameterSnapshot snap;
  for (const auto& p : model.parameters()) {
    snap.names.push_back(p.name);
    snap.shapes.push_back(p.tensor.shape());
    snap.values.push_back(p.tensor.to_vector());
  }
  return snap;
}

void restore(Classifier<float>& model, const ParameterSnapshot& snap) {
  auto params = model.parameters();
  if (params.size() != snap.names.size()) throw ShapeError("restore: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != snap.names[i] || params[i].tensor.shape() != snap.shapes[i]) {
      throw ShapeError("restore: parameter '" + params[i].name + "' does not match the snapshot");
    }
    std::copy(snap.values[i].begin(), snap.values[i].end(), params[i].tensor.mutable_data().begin());
  }
}

std::pair<double, double> loss_and_accuracy(Classifier<float>& model, const PreparedSet& set, std::size_t batch) {
  if (set.count() == 0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  NoGradGuard no_grad;
  std::vector<std::size_t> order(set.count());
  std::iota(order.begin(), order.end(), 0);
  double loss = 0;
  std::size_t correct = 0;
  std::vector<int> labels;
  for (std::size_t begin = 0; begin < set.count(); begin += batch) {
    const std::size_t end = std::min(set.count(), begin + batch);
    auto x = make_batch(set, order, begin, end, &labels);
    auto result = model.run_batch(x, labels);
    loss += static_cast<double>(result.loss.item()) * static_cast<double>(end - begin);
    for (std::size_t k = 0; k < labels.size(); ++k) correct += result.predictions[k] == labels[k];
  }
  const auto n = static_cast<double>(set.count());
  return {loss / n, static_cast<double>(correct) / n};
}

TrainResult train(Classifier<float>& model, const PreparedSet& train_set, const PreparedSet& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch, const StopPredicate& stop) {
  config.validate();
  if (train_set.count() == 0) throw std::invalid_argument("train: empty training split");
  if (train_set.size != model.input_size() || (val_set.count() > 0 && val_set.size != model.input_size())) {
    throw ShapeError("train: tile size does not match the model input size");
  }
  auto named = model.parameters();
  std::vector<Tensor<float>> params;
  for (const auto& p : named) params.push_back(p.tensor);
  Adam<float> optimizer(params, config.optimizer);

  Rng rng = make_rng(config.seed, 0x7EA1);
  const std::size_t batch = config.batch_size();
  std::vector<std::size_t> order(train_set.count());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> labels;
  std::size_t step = 0;
  double best_acc = -1;

  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double epoch_lr = lr_schedule(config.optimizer.lr, config.decay(), epoch);
    double lr = epoch_lr;
    double loss_sum = 0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      auto x = make_batch(train_set, order, begin, end, &labels);
      optimizer.zero_grad();
      auto out = model.run_batch(x, labels);
      backward(out.loss);
      lr = config.decay_per == DecayUnit::epoch ? epoch_lr : lr_schedule(config.optimizer.lr, config.decay(), step);
      optimizer.step(lr);
      ++step;
      loss_sum += static_cast<double>(out.loss.item()) * static_cast<double>(end - begin);
      for (std::size_t k = 0; k < labels.size(); ++k) correct += out.predictions[k] == labels[k];
    }
    optimizer.zero_grad();
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
    std::tie(rec.val_loss, rec.val_acc) = loss_and_accuracy(model, val_set, batch);
    rec.lr = lr;
    result.history.push_back(rec);
    const bool has_val = val_set.count() > 0;
    const bool stopping = stop && stop(rec);
    const bool last = stopping || epoch + 1 == config.epochs;
    if ((has_val && rec.val_acc > best_acc) || (!has_val && last)) {
      best_acc = rec.val_acc;
      result.best_epoch = rec.epoch;
      result.best = snapshot(model);
    }
    if (on_epoch) on_epoch(rec);
    if (stopping) break;
  }
  return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,train_loss,train_acc,val_loss,val_acc,lr\n";
  char line[256];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss, r.train_acc,
                  r.val_loss, r.val_acc, r.lr);
    out << line;
  }
}

EvalReport score(const std::vector<int>& labels, const std::vector<int>& predictions) {
  if (labels.empty()) throw std::invalid_argument("evaluate: empty test split");
  if (labels.size() != predictions.size()) throw ShapeError("score: label/prediction count mismatch");
  EvalReport r;
  r.total = labels.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto t = static_cast<std::size_t>(labels[i]), p = static_cast<std::size_t>(predictions[i]);
    if (t >= data::kNumClasses || p >= data::kNumClasses) throw std::out_of_range("score: class index out of range");
    ++r.confusion[t][p];
    correct += t == p;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
  for (std::size_t k = 0; k < data::kNumClasses; ++k) {
    std::size_t row = 0, col = 0;
    for (std::size_t m = 0; m < data::kNumClasses; ++m) {
      row += r.confusion[k][m];
      col += r.confusion[m][k];
    }
    r.recall[k] = row ? static_cast<double>(r.confusion[k][k]) / static_cast<double>(row) : 0.0;
    r.precision[k] = col ? static_cast<double>(r.confusion[k][k]) / static_cast<double>(col) : 0.0;
  }
  return r;
}

EvalReport evaluate(Classifier<float>& model, const PreparedSet& test_set, std::size_t batch) {
  if (test_set.count() == 0) throw std::invalid_argument("evaluate: empty test split");
  if (test_set.size != model.input_size()) throw ShapeError("evaluate: tile size does not match the model");
  std::vector<std::size_t> order(test_set.count());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> predictions;
  for (std::size_t begin = 0; begin < order.size(); begin += batch) {
    const std::size_t end = std::min(order.size(), begin + batch);
    auto x = make_batch(test_set, order, begin, end, nullptr);
    auto p = model.predict(x);
    predictions.insert(predictions.end(), p.begin(), p.end());
  }
  auto report = score(test_set.labels, predictions);
  report.architecture = model.architecture();
  return report;
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"architecture", r.architecture}, {"mode", r.mode},         {"accuracy", r.accuracy},
                     {"confusion", r.confusion},       {"precision", r.precision}, {"recall", r.recall},
                     {"total", r.total},               {"fingerprint", r.fingerprint}};
}

void from_json(const nlohmann::json& j, EvalReport& r) {
  r.architecture = j.at("architecture").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.accuracy = j.at("accuracy").get<double>();
  if (j.contains("confusion")) j.at("confusion").get_to(r.confusion);
  if (j.contains("precision")) j.at("precision").get_to(r.precision);
  if (j.contains("recall")) j.at("recall").get_to(r.recall);
  r.total = j.value("total", std::size_t{0});
  r.fingerprint = j.value("fingerprint", nlohmann::json::object());
}

std::string format_accuracy(double accuracy) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5f", accuracy);
  return buf;
}

std::string mode_column(data::PolarizationMode mode) {
  return mode == data::PolarizationMode::VHVV ? "VH-VV" : data::to_string(mode);
}

ReportTable build_report(const std::vector<EvalReport>& results) {
  ReportTable t;
  t.columns = {"VH", "VV", "VH-VV"};
  for (const auto& r : results) {
    const auto column = mode_column(data::parse_mode(r.mode));
    if (std::find(t.rows.begin(), t.rows.end(), r.architecture) == t.rows.end()) t.rows.push_back(r.architecture);
    t.cells[{r.architecture, column}] = r.accuracy;
  }
  return t;
}

std::string render_csv(const ReportTable& table) {
  std::ostringstream out;
  out << "Architecture";
  for (const auto& c : table.columns) out << ',' << c;
  out << '\n';
  for (const auto& row : table.rows) {
    out << row;
    for (const auto& c : table.columns) {
      out << ',';
      auto it = table.cells.find({row, c});
      if (it != table.cells.end()) out << format_accuracy(it->second);
    }
    out << '\n';
  }
  return out.str();
}

std::string render_text(const ReportTable& table) {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({"Architecture"});
  for (const auto& c : table.columns) grid.back().push_back(c);
  for (const auto& row : table.rows) {
    grid.push_back({row});
    for (const auto& c : table.columns) {
      auto it = table.cells.find({row, c});
      grid.back().push_back(it == table.cells.end() ? "" : format_accuracy(it->second));
    }
  }
  std::vector<std::size_t> width(grid.front().size(), 0);
  for (const auto& line : grid)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  std::ostringstream out;
  for (const auto& line : grid) {
    std::string text;
    for (std::size_t i = 0; i < line.size(); ++i) {
      text += line[i];
      if (i + 1 < line.size()) text += std::string(width[i] - line[i].size() + 2, ' ');
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out << text << '\n';
  }
  return out.str();
}

std::vector<EvalReport> load_results(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::invalid_argument("no results directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > 10 && name.ends_with(".eval.json")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<EvalReport> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    try {
      out.push_back(nlohmann::json::parse(in).get<EvalReport>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(f.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace sarcaps::harness
