// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Optional arguments select criteria by substring.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sarcaps/capsnet.hpp"
#include "sarcaps/data.hpp"
#include "sarcaps/experiment.hpp"
#include "sarcaps/gan.hpp"
#include "sarcaps/gradient_suite.hpp"
#include "sarcaps/harness.hpp"
#include "sarcaps/ops.hpp"
#include "sarcaps/random.hpp"

#ifndef SARCAPS_CLI
#error "SARCAPS_CLI must name the sarcaps executable"
#endif

namespace fs = std::filesystem;
using namespace sarcaps;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

double cpu_seconds(std::clock_t start) { return static_cast<double>(std::clock() - start) / CLOCKS_PER_SEC; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sarcaps_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SARCAPS_CLI + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

data::Manifest synth_manifest(const fs::path& dir, std::size_t per_class, std::size_t size, std::uint64_t seed,
                              std::vector<data::Polarization> pols = {data::Polarization::VH}) {
  data::SynthOptions o;
  o.per_class = per_class;
  o.size = size;
  o.seed = seed;
  o.polarizations = std::move(pols);
  return data::write_synth_dataset(data::synth_dataset(o), dir, dir / "tiles");
}

harness::TrainConfig capsnet_desk() {
  harness::TrainConfig c;
  c.model = "capsnet";
  c.optimizer.lr = 1e-4;
  c.batch = 10;
  c.lr_decay = 0.9;
  return c;
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  const std::clock_t start = std::clock();
  double worst = 0;
  std::string worst_name;
  for (const auto& name : gradsuite::suite_names()) {
    const auto r = gradsuite::run_suite(name, 20);
    if (r.max_relative_error > worst || worst_name.empty()) worst = r.max_relative_error, worst_name = name;
  }
  const double t = cpu_seconds(start);
  return {worst < 1e-4 && t < 300.0,
          fmt("%zu suites x 20 seeds, max rel err %.3g (%s), %.1f s", gradsuite::suite_names().size(), worst,
              worst_name.c_str(), t)};
}

// Uniform-average oracle for a single routing iteration.
std::vector<double> uniform_oracle(const std::vector<double>& u_hat, std::size_t p, std::size_t j, std::size_t d) {
  std::vector<double> v(j * d);
  for (std::size_t k = 0; k < j; ++k) {
    std::vector<double> s(d, 0.0);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t e = 0; e < d; ++e) s[e] += (1.0 / static_cast<double>(j)) * u_hat[(i * j + k) * d + e];
    double sq = 0;
    for (double x : s) sq += x * x;
    const double factor = std::sqrt(sq) / (1.0 + sq);
    for (std::size_t e = 0; e < d; ++e) v[k * d + e] = s[e] * factor;
  }
  return v;
}

Outcome capsule_invariants() {
  Rng rng = make_rng(11, 0xACC);
  // squash over 1e5 vectors spanning tiny to huge scales
  const std::size_t n = 100000, dim = 8;
  std::vector<double> raw = standard_normal<double>(n * dim, rng);
  std::uniform_real_distribution<double> log_scale(-6, 6);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::pow(10.0, log_scale(rng));
    for (std::size_t e = 0; e < dim; ++e) raw[i * dim + e] *= s;
  }
  const auto v = caps::squash(Tensor<double>({n, dim}, raw), 1).to_vector();
  double max_norm = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0;
    for (std::size_t e = 0; e < dim; ++e) sq += v[i * dim + e] * v[i * dim + e];
    max_norm = std::max(max_norm, std::sqrt(sq));
  }

  double max_dev = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r = make_rng(seed, 0xACD);
    const std::size_t batch = 2, p = 10 + seed, j = 3, d = 16;
    auto uh = uniform<double>(batch * p * j * d, -1, 1, r);
    const auto res = caps::dynamic_routing(Tensor<double>({batch, p, j, d}, uh), 3);
    for (const auto& c : res.couplings)
      for (std::size_t row = 0; row < batch * p; ++row) {
        double total = 0;
        for (std::size_t k = 0; k < j; ++k) total += c[row * j + k];
        max_dev = std::max(max_dev, std::abs(total - 1.0));
      }
  }

  std::size_t mismatches = 0, cases = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng r = make_rng(seed, 0xACE);
    const std::size_t p = 1 + seed % 8, j = 2 + seed % 3, d = 4 + seed % 5;
    auto uh = uniform<double>(p * j * d, -1, 1, r);
    const auto got = caps::dynamic_routing(Tensor<double>({p, j, d}, uh), 1).v.to_vector();
    if (got != uniform_oracle(uh, p, j, d)) ++mismatches;
    ++cases;
  }
  return {max_norm < 1.0 && max_dev <= 1e-6 && mismatches == 0,
          fmt("max squash norm %.17g over 1e5 vectors; max |sum c - 1| %.3g; iterations=1 oracle mismatches %zu/%zu",
              max_norm, max_dev, mismatches, cases)};
}

Outcome overfit(const std::string& model) {
  const fs::path dir = scratch("overfit_" + model);
  auto manifest = synth_manifest(dir, 20, 64, 7);
  harness::TrainConfig config = capsnet_desk();
  if (model == "cnn") {
    config = harness::TrainConfig{};
    config.model = "cnn";
    config.batch = 10;
  }
  config.epochs = 30;
  std::vector<std::size_t> all(manifest.records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto set = harness::prepare(data::load_samples(manifest, all, config.input_size()), config.db);
  auto net = harness::build_model(config);

  const std::clock_t start = std::clock();
  double best = 0;
  std::size_t reached = 0;
  harness::train(*net, set, harness::PreparedSet{}, config, {}, [&](const harness::EpochRecord& r) {
    best = std::max(best, r.train_acc);
    if (r.train_acc >= 0.95 && reached == 0) reached = r.epoch;
    return reached != 0;
  });
  const double t = cpu_seconds(start);
  fs::remove_all(dir);
  return {reached != 0 && t < 600.0,
          reached ? fmt("%zu tiles, train accuracy >= 0.95 at epoch %zu, %.1f s", set.count(), reached, t)
                  : fmt("%zu tiles, best train accuracy %.3f in 30 epochs, %.1f s", set.count(), best, t)};
}

Outcome generalization() {
  const fs::path dir = scratch("generalization");
  auto manifest = synth_manifest(dir, 100, 64, 7);
  data::split_dataset(manifest, {}, 7);
  harness::TrainConfig config = capsnet_desk();
  config.epochs = 15;
  const std::clock_t start = std::clock();
  const auto run = harness::run_training(manifest, config, dir / "run");
  const double t = cpu_seconds(start);
  fs::remove_all(dir);
  const double acc = run.test ? run.test->accuracy : 0.0;
  return {acc >= 0.80 && t < 1800.0,
          fmt("test accuracy %.5f on %zu tiles (best epoch %zu of %zu), %.1f s", acc,
              run.test ? run.test->total : 0, run.training.best_epoch, config.epochs, t)};
}

Outcome pipeline_exactness() {
  std::vector<std::string> failures;
  // split sizes
  data::Manifest m;
  for (std::size_t i = 0; i < 2738; ++i) {
    data::TileRecord r;
    r.id = fmt("chip%05zu", i);
    r.path = r.id + ".sart";
    m.records.push_back(r);
  }
  data::split_dataset(m, {}, 1);
  const std::size_t tr = m.count(data::Split::train), va = m.count(data::Split::val), te = m.count(data::Split::test);
  if (tr != 1752 || va != 438 || te != 548) failures.push_back(fmt("split %zu/%zu/%zu", tr, va, te));

  // augmentation multiplicities and flip involution
  data::SynthOptions o;
  o.per_class = 4;
  o.size = 32;
  o.seed = 9;
  std::vector<data::Sample> train;
  for (const auto& t : data::synth_dataset(o)) {
    data::Sample s;
    s.id = t.id;
    s.label = static_cast<int>(t.ship_class);
    s.tile = t.tile;
    train.push_back(s);
  }
  const std::size_t n = train.size();
  const std::size_t a = data::augment(train, data::AugmentPolicy::A, 1).size();
  const std::size_t b = data::augment(train, data::AugmentPolicy::B, 1).size();
  if (a != 3 * n || b != 4 * n) failures.push_back(fmt("augment A %zu, B %zu for n=%zu", a, b, n));
  std::size_t flip_bad = 0;
  for (const auto& s : train) {
    if (data::flip_horizontal(data::flip_horizontal(s.tile)).pixels != s.tile.pixels) ++flip_bad;
    if (data::flip_vertical(data::flip_vertical(s.tile)).pixels != s.tile.pixels) ++flip_bad;
  }
  if (flip_bad) failures.push_back(fmt("%zu double flips differ", flip_bad));

  // dual polarization doubles the sample count
  data::Manifest dual;
  for (std::size_t i = 0; i < 50; ++i)
    for (auto pol : {data::Polarization::VH, data::Polarization::VV}) {
      data::TileRecord r;
      r.id = fmt("chip%03zu_%s", i, data::to_string(pol).c_str());
      r.polarization = pol;
      r.split = data::Split::train;
      dual.records.push_back(r);
    }
  const std::size_t vh = data::select_polarization(dual, data::PolarizationMode::VH).size();
  const std::size_t both = data::select_polarization(dual, data::PolarizationMode::VHVV).size();
  if (vh != 50 || both != 100) failures.push_back(fmt("VH %zu, VHVV %zu for 50 chips", vh, both));

  return {failures.empty(),
          failures.empty() ? fmt("split 1752/438/548; A=3n, B=4n (n=%zu); flips involutive; VHVV=2x chips", n)
                           : [&] {
                               std::string s;
                               for (const auto& f : failures) s += (s.empty() ? "" : "; ") + f;
                               return s;
                             }()};
}

Outcome margin_closed_forms() {
  using D = Tensor<double>;
  const double l0 = caps::margin_loss(D({3}, {0.9, 0.1, 0.1}), {1, 0, 0}).item();
  const double l1 = caps::margin_loss(D({3}, {0.0, 0.1, 0.1}), {1, 0, 0}).item();
  const double l2 = caps::margin_loss(D({3}, {0.9, 1.0, 0.1}), {1, 0, 0}).item();
  const bool ok = std::abs(l0) <= 1e-7 && std::abs(l1 - 0.81) <= 1e-7 && std::abs(l2 - 0.405) <= 1e-7;
  return {ok, fmt("L = %.10g, %.10g, %.10g (expected 0, 0.81, 0.405)", l0, l1, l2)};
}

struct GanRun {
  std::vector<gan::EpochLoss> history;
  std::vector<float> samples;
  Shape shape;
};

GanRun train_gan(const std::vector<std::vector<float>>& real, const gan::GanConfig& config) {
  gan::GanPair pair(config, data::ShipClass::Tanker, data::PolarizationMode::VH);
  pair.train(real, config.epochs);
  Rng rng = make_rng(3, 0xACF);
  const auto out = pair.generate(16, rng);
  return {pair.history(), out.to_vector(), out.shape()};
}

double mean_g(const std::vector<gan::EpochLoss>& h, std::size_t first, std::size_t last) {
  double total = 0;
  std::size_t n = 0;
  for (const auto& e : h)
    if (e.epoch >= first && e.epoch <= last) total += e.g_loss, ++n;
  return n ? total / static_cast<double>(n) : NAN;
}

// Shared between the GAN contract lines.
struct GanFixture {
  fs::path dir;
  data::Manifest manifest;
  gan::GanConfig config;
  GanRun first, second;
  bool ready = false;
};

GanFixture& gan_fixture() {
  static GanFixture f;
  if (f.ready) return f;
  f.dir = scratch("gan");
  f.manifest = synth_manifest(f.dir, 50, 32, 7);
  data::split_dataset(f.manifest, {}, 7);
  f.config = gan::GanConfig::desk();
  std::vector<std::size_t> idx;
  for (std::size_t i : data::select_polarization(f.manifest, data::PolarizationMode::VH, data::Split::train))
    if (f.manifest.records[i].ship_class == data::ShipClass::Tanker) idx.push_back(i);
  std::vector<std::vector<float>> real;
  for (const auto& s : data::load_samples(f.manifest, idx, f.config.tile_size))
    real.push_back(gan::to_signed(data::normalize_tile(s.tile)));
  f.first = train_gan(real, f.config);
  f.second = train_gan(real, f.config);
  f.ready = true;
  return f;
}

Outcome gan_determinism_and_range() {
  const auto& f = gan_fixture();
  bool same = f.first.samples == f.second.samples && f.first.history.size() == f.second.history.size();
  for (std::size_t i = 0; same && i < f.first.history.size(); ++i)
    same = f.first.history[i].d_loss == f.second.history[i].d_loss &&
           f.first.history[i].g_loss == f.second.history[i].g_loss;
  const auto [lo, hi] = std::minmax_element(f.first.samples.begin(), f.first.samples.end());
  const bool shape_ok = f.first.shape == Shape{16, f.config.tile_size, f.config.tile_size, 1};
  const bool range_ok = *lo >= -1.0f && *hi <= 1.0f;
  return {same && shape_ok && range_ok && f.first.history.size() == f.config.epochs,
          fmt("%zu epochs, reruns %s; samples [16,%zu,%zu,1] in [%.4f, %.4f]", f.first.history.size(),
              same ? "identical" : "differ", f.config.tile_size, f.config.tile_size, *lo, *hi)};
}

Outcome gan_rebalance() {
  auto& f = gan_fixture();
  std::map<data::ShipClass, std::unique_ptr<gan::GanPair>> owned;
  std::map<data::ShipClass, const gan::GanPair*> gans;
  for (std::size_t c = 0; c < data::kNumClasses; ++c) {
    const auto cls = static_cast<data::ShipClass>(c);
    owned[cls] = std::make_unique<gan::GanPair>(f.config, cls, data::PolarizationMode::VH);
    gans[cls] = owned[cls].get();
  }
  const std::size_t target = 200;
  const auto s1 = gan::rebalance(f.manifest, data::PolarizationMode::VH, gans, target, 1, f.dir / "generated");
  const auto after = f.manifest.class_counts(data::Split::train, data::PolarizationMode::VH);
  const auto s2 = gan::rebalance(f.manifest, data::PolarizationMode::VH, gans, target, 1, f.dir / "generated");
  bool exact = true, idempotent = true;
  std::size_t generated = 0;
  for (std::size_t c = 0; c < data::kNumClasses; ++c) {
    exact = exact && after[c] == target && s1.after[c] == target;
    idempotent = idempotent && s2.generated[c] == 0;
    generated += s1.generated[c];
  }
  return {exact && idempotent,
          fmt("train per class %zu/%zu/%zu after generating %zu (from %zu/%zu/%zu); second pass generated %zu",
              after[0], after[1], after[2], generated, s1.before[0], s1.before[1], s1.before[2],
              s2.generated[0] + s2.generated[1] + s2.generated[2])};
}

Outcome gan_loss_trend() {
  const auto& f = gan_fixture();
  const double early = mean_g(f.first.history, 1, 50);
  const double late = mean_g(f.first.history, 150, 200);
  return {late < early, fmt("mean g_loss epochs 1-50 %.4f, epochs 150-200 %.4f", early, late)};
}

Outcome train_rerun_determinism() {
  const fs::path dir = scratch("rerun");
  auto manifest = synth_manifest(dir, 10, 64, 5);
  data::split_dataset(manifest, {}, 5);
  data::write_manifest(dir / "manifest.csv", manifest);
  const std::string common = "train --manifest \"" + (dir / "manifest.csv").string() +
                             "\" --model capsnet --epochs 2 --batch 10 --lr 1e-4 --seed 3 --out ";
  const int rc1 = run_cli(common + "\"" + (dir / "a").string() + "\"");
  const int rc2 = run_cli(common + "\"" + (dir / "b").string() + "\"");
  const std::string ha = slurp(dir / "a" / "history.csv"), hb = slurp(dir / "b" / "history.csv");
  const bool ok = rc1 == 0 && rc2 == 0 && !ha.empty() && ha == hb;
  fs::remove_all(dir);
  return {ok, fmt("exit codes %d/%d, history.csv %zu bytes, %s", rc1, rc2, ha.size(),
                  ha == hb ? "byte-identical" : "differs")};
}

Outcome report_schema() {
  const fs::path dir = scratch("report");
  const char* archs[] = {"CapsNet", "CNN (S)"};
  const char* modes[] = {"VH", "VV", "VH-VV"};
  double acc = 0.5;
  for (const char* a : archs)
    for (const char* m : modes) {
      harness::EvalReport r;
      r.architecture = a;
      r.mode = m;
      r.accuracy = (acc += 0.0412345);
      r.total = 10;
      nlohmann::json j = r;
      harness::write_json(dir / (std::string(a[1] == 'a' ? "caps" : "cnn") + "_" + m + ".eval.json"), j);
    }
  const int rc = run_cli("report --in \"" + dir.string() + "\" --out \"" + (dir / "table.csv").string() + "\"");
  const std::string csv = slurp(dir / "table.csv");
  std::vector<std::string> lines;
  std::stringstream ss(csv);
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  bool ok = rc == 0 && lines.size() == 3 && lines[0] == "Architecture,VH,VV,VH-VV";
  for (std::size_t i = 1; ok && i < lines.size(); ++i) {
    std::stringstream row(lines[i]);
    std::vector<std::string> cells;
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    ok = cells.size() == 4 && cells[0] == archs[i - 1];
    for (std::size_t k = 1; ok && k < cells.size(); ++k) ok = cells[k].size() == 7 && cells[k][1] == '.';
  }
  fs::remove_all(dir);
  return {ok, fmt("exit %d, %zu lines: %s", rc, lines.size(), ok ? "3 modes x 2 architectures, 5 decimals" : csv.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient-suite", gradient_suite},
      {"capsule-invariants", capsule_invariants},
      {"overfit-capsnet", [] { return overfit("capsnet"); }},
      {"overfit-cnn", [] { return overfit("cnn"); }},
      {"generalization-capsnet", generalization},
      {"pipeline-exactness", pipeline_exactness},
      {"margin-loss-closed-forms", margin_closed_forms},
      {"gan-determinism-range", gan_determinism_and_range},
      {"gan-rebalance", gan_rebalance},
      {"gan-g-loss-trend", gan_loss_trend},
      {"train-rerun-determinism", train_rerun_determinism},
      {"report-schema", report_schema},
  };
  std::size_t failed = 0, ran = 0;
  for (const auto& [name, check] : criteria) {
    bool selected = argc < 2;
    for (int i = 1; i < argc; ++i) selected = selected || name.find(argv[i]) != std::string::npos;
    if (!selected) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    ++ran;
    if (!o.pass) ++failed;
    std::printf("%s  %-26s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(fs::temp_directory_path() / "sarcaps_acceptance_gan");
  std::printf("%zu/%zu criteria passed\n", ran - failed, ran);
  return failed ? 1 : 0;
}
