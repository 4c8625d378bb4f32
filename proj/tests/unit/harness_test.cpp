#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sarcaps/checkpoint.hpp"
#include "sarcaps/experiment.hpp"
#include "sarcaps/harness.hpp"
#include "sarcaps/ops.hpp"
#include "sarcaps/optim.hpp"

namespace sarcaps {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor<double> w({1}, {0.5}, true);
  AdamState<double> state;
  adam_step<double>({w}, {{1.0}}, state, 0.001, AdamConfig{});
  EXPECT_NEAR(w[0], 0.5 - 0.001, 1e-9);
  EXPECT_EQ(state.t, 1u);
}

TEST(Adam, ZeroGradientKeepsParametersAndCountsStep) {
  Tensor<double> w({3}, {1, -2, 3}, true);
  AdamState<double> state;
  adam_step<double>({w}, {{0, 0, 0}}, state, 0.001, AdamConfig{});
  EXPECT_EQ(w.to_vector(), (std::vector<double>{1, -2, 3}));
  EXPECT_EQ(state.t, 1u);
}

TEST(Adam, TensorsUpdateIndependently) {
  Tensor<double> a({1}, {0}, true), b({1}, {0}, true);
  AdamState<double> state;
  adam_step<double>({a, b}, {{2.0}, {-0.5}}, state, 0.01, AdamConfig{});
  EXPECT_NEAR(a[0], -0.01, 1e-9);
  EXPECT_NEAR(b[0], 0.01, 1e-9);
  EXPECT_THROW(adam_step<double>({a}, {{1.0, 2.0}}, state, 0.01, AdamConfig{}), ShapeError);
}

TEST(Adam, ReadsGradientsFromParameters) {
  Tensor<float> w({2}, {1, 1}, true);
  Adam<float> opt({w}, AdamConfig{});
  backward(ops::sum(ops::mul(w, w)));
  opt.step();
  EXPECT_NEAR(w[0], 0.999f, 1e-6f);
  opt.zero_grad();
  EXPECT_FALSE(w.has_grad());
}

TEST(LrSchedule, ExponentialPerEpoch) {
  EXPECT_DOUBLE_EQ(lr_schedule(0.001, 0.9, 0), 0.001);
  EXPECT_NEAR(lr_schedule(0.001, 0.9, 1), 0.0009, 1e-15);
  EXPECT_DOUBLE_EQ(lr_schedule(0.001, 1.0, 17), 0.001);
  for (std::size_t e = 0; e < 20; ++e) EXPECT_LE(lr_schedule(0.001, 0.9, e + 1), lr_schedule(0.001, 0.9, e));
}

TEST(Score, AllCorrectIsDiagonal) {
  const auto r = harness::score({0, 1, 2, 2}, {0, 1, 2, 2});
  EXPECT_EQ(r.accuracy, 1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(r.confusion[i][j] > 0, i == j);
  }
}

TEST(Score, HandScoredTenSamples) {
  const std::vector<int> truth = {0, 0, 0, 1, 1, 1, 2, 2, 2, 2};
  const std::vector<int> pred = {0, 1, 0, 1, 1, 2, 2, 0, 2, 2};
  // correct: 0,2,3,4,6,8,9 -> 7 of 10
  const auto r = harness::score(truth, pred);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.7);
  EXPECT_EQ(r.total, 10u);
  EXPECT_EQ(r.confusion[0][1], 1u);
  EXPECT_EQ(r.confusion[2][0], 1u);
  EXPECT_DOUBLE_EQ(r.recall[2], 0.75);
  EXPECT_DOUBLE_EQ(r.precision[0], 2.0 / 3.0);
  std::size_t row2 = 0;
  for (auto v : r.confusion[2]) row2 += v;
  EXPECT_EQ(row2, 4u);
  EXPECT_THROW(harness::score({}, {}), std::invalid_argument);
}

TEST(Report, LayoutAndFormatting) {
  EXPECT_EQ(harness::format_accuracy(0.650911), "0.65091");
  std::vector<harness::EvalReport> rows(4);
  rows[0].architecture = "CapsNet", rows[0].mode = "VH", rows[0].accuracy = 0.65091;
  rows[1].architecture = "CapsNet", rows[1].mode = "VV", rows[1].accuracy = 0.5;
  rows[2].architecture = "CapsNet", rows[2].mode = "VHVV", rows[2].accuracy = 0.66727;
  rows[3].architecture = "CNN (S)", rows[3].mode = "VV", rows[3].accuracy = 1.0 / 3.0;
  const auto t = harness::build_report(rows);
  EXPECT_EQ(harness::render_csv(t),
            "Architecture,VH,VV,VH-VV\n"
            "CapsNet,0.65091,0.50000,0.66727\n"
            "CNN (S),,0.33333,\n");
  EXPECT_EQ(harness::render_text(t),
            "Architecture  VH       VV       VH-VV\n"
            "CapsNet       0.65091  0.50000  0.66727\n"
            "CNN (S)                0.33333\n");
}

TEST(Checkpoint, RoundTripAndCorruption) {
  const fs::path path = fs::temp_directory_path() / "sarcaps_ckpt_test.ckpt";
  Checkpoint ck;
  ck.meta = {{"kind", "test"}, {"n", 3}};
  ck.tensors.push_back({"a", {2, 3}, {1, 2, 3, 4, 5, 6}});
  ck.tensors.push_back({"b.c", {1}, {-0.25f}});
  write_checkpoint(path, ck);
  const auto back = read_checkpoint(path);
  EXPECT_EQ(back.meta, ck.meta);
  ASSERT_EQ(back.tensors.size(), 2u);
  EXPECT_EQ(back.at("a").shape, (Shape{2, 3}));
  EXPECT_EQ(back.at("a").values, ck.tensors[0].values);
  EXPECT_EQ(back.at("b.c").values, ck.tensors[1].values);
  EXPECT_THROW(back.at("missing"), FormatError);

  auto bytes = slurp(path);
  bytes[0] = 'X';
  std::ofstream(path, std::ios::binary) << bytes;
  EXPECT_THROW(read_checkpoint(path), FormatError);
  std::ofstream(path, std::ios::binary) << slurp(path).substr(0, 9);
  EXPECT_THROW(read_checkpoint(path), FormatError);
  fs::remove(path);
}

TEST(TrainConfig, DefaultsAndLayering) {
  harness::TrainConfig c;
  EXPECT_EQ(c.batch_size(), 100u);
  EXPECT_DOUBLE_EQ(c.decay(), 0.9);
  c.model = "cnn";
  EXPECT_EQ(c.batch_size(), 32u);
  EXPECT_DOUBLE_EQ(c.decay(), 1.0);
  nlohmann::json patch = {{"epochs", 7}, {"optimizer", {{"lr", 0.01}}}, {"mode", "VH-VV"}, {"head", "L"}};
  harness::from_json(patch, c);
  EXPECT_EQ(c.epochs, 7u);
  EXPECT_DOUBLE_EQ(c.optimizer.lr, 0.01);
  EXPECT_DOUBLE_EQ(c.optimizer.beta1, 0.9);
  EXPECT_EQ(c.mode, data::PolarizationMode::VHVV);
  EXPECT_EQ(c.cnn.head, cnn::Head::L);
  c.lr_decay = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(harness::parse_augmentation("C"), std::invalid_argument);
}

class Experiment : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "sarcaps_experiment_test";
    fs::remove_all(dir_);
    data::SynthOptions o;
    o.per_class = 10;
    o.size = 24;
    o.seed = 3;
    o.polarizations = {data::Polarization::VH, data::Polarization::VV};
    manifest_ = data::write_synth_dataset(data::synth_dataset(o), dir_, dir_ / "tiles");
    data::split_dataset(manifest_, {}, 5);
    config_.model = "cnn";
    config_.epochs = 2;
    config_.batch = 8;
    config_.cnn.input_size = 24;
    config_.cnn.conv_blocks = {{4, 3, 2}, {4, 3, 2}};
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
  data::Manifest manifest_;
  harness::TrainConfig config_;
};

TEST_F(Experiment, SplitViewsAndAugmentation) {
  auto train = harness::load_split(manifest_, data::Split::train, config_);
  const std::size_t n = train.size();
  EXPECT_EQ(n, 3u * 6u);  // floor(10 * 0.64) chips per class, VH only
  config_.augmentation = harness::Augmentation::A;
  EXPECT_EQ(harness::load_split(manifest_, data::Split::train, config_).size(), 3 * n);
  EXPECT_EQ(harness::load_split(manifest_, data::Split::val, config_).size(), 3u * 1u);
  config_.augmentation = harness::Augmentation::B;
  EXPECT_EQ(harness::load_split(manifest_, data::Split::train, config_).size(), 4 * n);
  config_.mode = data::PolarizationMode::VHVV;
  config_.augmentation = harness::Augmentation::none;
  EXPECT_EQ(harness::load_split(manifest_, data::Split::train, config_).size(), 2 * n);
  for (const auto& s : harness::load_split(manifest_, data::Split::test, config_)) {
    EXPECT_EQ(s.split, data::Split::test);
    EXPECT_EQ(s.tile.height, 24u);
  }
}

TEST_F(Experiment, RunWritesArtifactsDeterministically) {
  const auto a = harness::run_training(manifest_, config_, dir_ / "run_a");
  const auto b = harness::run_training(manifest_, config_, dir_ / "run_b");
  ASSERT_EQ(a.training.history.size(), 2u);
  EXPECT_EQ(slurp(dir_ / "run_a" / "history.csv"), slurp(dir_ / "run_b" / "history.csv"));
  EXPECT_EQ(slurp(dir_ / "run_a" / "best.ckpt"), slurp(dir_ / "run_b" / "best.ckpt"));
  ASSERT_TRUE(a.test.has_value());
  EXPECT_EQ(a.test->total, 3u * 3u);
  EXPECT_EQ(a.test->architecture, "CNN (S)");
  EXPECT_EQ(a.test->mode, "VH");

  harness::TrainConfig stored;
  auto model = harness::load_model(read_checkpoint(dir_ / "run_a" / "best.ckpt"), &stored);
  EXPECT_EQ(stored.epochs, 2u);
  const auto r1 = harness::evaluate_manifest(*model, manifest_, data::PolarizationMode::VH, stored.db);
  const auto r2 = harness::evaluate_manifest(*model, manifest_, data::PolarizationMode::VH, stored.db);
  EXPECT_EQ(r1.accuracy, a.test->accuracy);
  EXPECT_EQ(r1.confusion, r2.confusion);

  const auto results = harness::load_results(dir_);
  EXPECT_EQ(results.size(), 2u);
}

TEST_F(Experiment, GanRecordsOnlyUnderGanPolicy) {
  data::TileRecord r = manifest_.records.front();
  r.id = "gan_extra";
  r.synthetic = true;
  r.split = data::Split::train;
  manifest_.records.push_back(r);
  const std::size_t base = harness::load_split(manifest_, data::Split::train, config_).size();
  config_.augmentation = harness::Augmentation::gan;
  EXPECT_EQ(harness::load_split(manifest_, data::Split::train, config_).size(), base + 1);
}

}  // namespace
}  // namespace sarcaps
