// Command-line front end: dataset preparation, GAN rebalancing, training,
// evaluation, reporting and gradient checks.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "sarcaps/checkpoint.hpp"
#include "sarcaps/data.hpp"
#include "sarcaps/experiment.hpp"
#include "sarcaps/gan.hpp"
#include "sarcaps/gradient_suite.hpp"
#include "sarcaps/harness.hpp"

namespace fs = std::filesystem;
using namespace sarcaps;

namespace {

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::vector<float>> class_tiles(const data::Manifest& manifest, data::ShipClass cls,
                                            data::PolarizationMode mode, std::size_t size, const data::DbRange& db) {
  std::vector<std::size_t> indices;
  for (std::size_t i : data::select_polarization(manifest, mode, data::Split::train)) {
    const auto& r = manifest.records[i];
    if (r.ship_class == cls && !r.synthetic) indices.push_back(i);
  }
  std::vector<std::vector<float>> out;
  for (const auto& s : data::load_samples(manifest, indices, size)) {
    out.push_back(gan::to_signed(data::normalize_tile(s.tile, db)));
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_counts(const data::Manifest& m) {
  for (auto split : {data::Split::train, data::Split::val, data::Split::test, data::Split::unassigned}) {
    const auto c = m.class_counts(split, data::PolarizationMode::VHVV);
    if (c[0] + c[1] + c[2] == 0) continue;
    std::printf("  %-10s Tanker %zu  ContainerShip %zu  BulkCarrier %zu\n", data::to_string(split).c_str(), c[0],
                c[1], c[2]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAR ship classification: capsule network, CNN baselines and GAN rebalancing"};
  app.require_subcommand(1);

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Build, import and split tile manifests");
  dataset->require_subcommand(1);

  fs::path import_in, import_out;
  auto* imp = dataset->add_subcommand("import", "Import chips with AIS metadata into a manifest");
  imp->add_option("--input", import_in, "Directory with *.xml metadata and *_VH/_VV.sart rasters")->required();
  imp->add_option("--out", import_out, "Manifest to write")->required();

  data::SynthOptions synth;
  fs::path synth_out;
  std::string synth_pol = "VH";
  auto* syn = dataset->add_subcommand("synth", "Generate a procedural ship dataset");
  syn->add_option("--per-class", synth.per_class, "Chips per class")->capture_default_str();
  syn->add_option("--size", synth.size, "Tile side in pixels")->capture_default_str();
  syn->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  syn->add_option("--polarization", synth_pol, "VH, VV or both")->capture_default_str();
  syn->add_option("--out", synth_out, "Manifest to write")->required();

  fs::path split_manifest;
  std::string proportions = "64,16,20";
  std::uint64_t split_seed = 1;
  auto* spl = dataset->add_subcommand("split", "Assign train/val/test splits per class");
  spl->add_option("--manifest", split_manifest)->required();
  spl->add_option("--proportions", proportions, "train,val,test percentages")->capture_default_str();
  spl->add_option("--seed", split_seed)->capture_default_str();

  // augment
  fs::path aug_manifest;
  std::string aug_policy;
  std::uint64_t aug_seed = 1;
  auto* aug = app.add_subcommand("augment", "Materialize flip/rotation copies of the train split");
  aug->add_option("--manifest", aug_manifest)->required();
  aug->add_option("--policy", aug_policy, "A or B")->required()->check(CLI::IsMember({"A", "B"}));
  aug->add_option("--seed", aug_seed)->capture_default_str();

  // gan
  auto* gan_cmd = app.add_subcommand("gan", "Train class GANs and rebalance the train split");
  gan_cmd->require_subcommand(1);
  fs::path gan_manifest, gan_out, gan_config_file;
  std::string gan_class, gan_mode = "VH";
  std::optional<std::size_t> gan_epochs;
  std::optional<std::uint64_t> gan_seed;
  bool gan_paper = false;
  auto* gtrain = gan_cmd->add_subcommand("train", "Train the GAN of one ship class");
  gtrain->add_option("--manifest", gan_manifest)->required();
  gtrain->add_option("--class", gan_class, "Tanker, ContainerShip or BulkCarrier")->required();
  gtrain->add_option("--epochs", gan_epochs);
  gtrain->add_option("--out", gan_out, "Checkpoint path; the loss history goes next to it as .csv")->required();
  gtrain->add_option("--mode", gan_mode, "VH, VV or VHVV")->capture_default_str();
  gtrain->add_option("--config", gan_config_file, "GanConfig JSON");
  gtrain->add_option("--seed", gan_seed);
  gtrain->add_flag("--paper", gan_paper, "Start from the 128x128 configuration instead of the 32x32 one");

  fs::path reb_manifest, reb_gans;
  std::optional<std::size_t> reb_target;
  std::uint64_t reb_seed = 1;
  auto* greb = gan_cmd->add_subcommand("rebalance", "Top up deficient classes with generated train tiles");
  greb->add_option("--manifest", reb_manifest)->required();
  greb->add_option("--target", reb_target, "Train tiles per class (default: GAN config target)");
  greb->add_option("--gans", reb_gans, "Directory of GAN checkpoints")->required();
  greb->add_option("--seed", reb_seed)->capture_default_str();

  // train
  fs::path train_manifest, train_out, train_config_file;
  std::optional<std::string> train_model, train_head, train_mode, train_aug;
  std::optional<std::size_t> train_epochs, train_batch;
  std::optional<double> train_lr, train_decay;
  std::optional<std::uint64_t> train_seed;
  bool train_paper = false;
  auto* trn = app.add_subcommand("train", "Train a classifier and score it on the test split");
  trn->add_option("--manifest", train_manifest)->required();
  trn->add_option("--out", train_out, "Run directory")->required();
  trn->add_option("--config", train_config_file, "TrainConfig JSON; flags override it");
  trn->add_option("--model", train_model)->check(CLI::IsMember({"capsnet", "cnn"}));
  trn->add_option("--head", train_head)->check(CLI::IsMember({"S", "L"}));
  trn->add_option("--mode", train_mode)->check(CLI::IsMember({"VH", "VV", "VHVV", "VH-VV"}));
  trn->add_option("--augmentation", train_aug)->check(CLI::IsMember({"none", "A", "B", "gan"}));
  trn->add_option("--epochs", train_epochs);
  trn->add_option("--batch", train_batch);
  trn->add_option("--lr", train_lr);
  trn->add_option("--lr-decay", train_decay);
  trn->add_option("--seed", train_seed);
  trn->add_flag("--paper", train_paper, "Use the 128x128 network configurations");

  // eval
  fs::path eval_ckpt, eval_manifest, eval_out;
  std::optional<std::string> eval_mode;
  auto* evl = app.add_subcommand("eval", "Score a checkpoint on the test split");
  evl->add_option("--model-ckpt", eval_ckpt)->required();
  evl->add_option("--manifest", eval_manifest)->required();
  evl->add_option("--mode", eval_mode)->check(CLI::IsMember({"VH", "VV", "VHVV", "VH-VV"}));
  evl->add_option("--out", eval_out, "Write the report as JSON (name it *.eval.json for `report`)");

  // report
  fs::path report_in, report_out;
  auto* rep = app.add_subcommand("report", "Tabulate *.eval.json results by architecture and mode");
  rep->add_option("--in", report_in)->required();
  rep->add_option("--out", report_out, "Table file; .csv selects CSV, anything else aligned text");

  // gradcheck
  std::string grad_module = "all";
  std::size_t grad_seeds = 20;
  auto* grd = app.add_subcommand("gradcheck", "64-bit finite-difference gradient suites");
  grd->add_option("--module", grad_module, "Suite name or all")->capture_default_str();
  grd->add_option("--seeds", grad_seeds)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (imp->parsed()) {
      data::ImportStats stats;
      const auto m = data::import_directory(import_in, import_out.parent_path(), &stats);
      data::write_manifest(import_out, m);
      std::printf("metadata files %zu, accepted %zu, rejected %zu, missing rasters %zu -> %zu records\n",
                  stats.metadata_files, stats.accepted_chips, stats.rejected_chips, stats.missing_rasters,
                  m.records.size());
    } else if (syn->parsed()) {
      if (synth_pol == "both") {
        synth.polarizations = {data::Polarization::VH, data::Polarization::VV};
      } else {
        synth.polarizations = {data::parse_polarization(synth_pol)};
      }
      const auto dir = synth_out.parent_path().empty() ? fs::path(".") : synth_out.parent_path();
      const auto m = data::write_synth_dataset(data::synth_dataset(synth), dir, dir / "tiles");
      data::write_manifest(synth_out, m);
      std::printf("%zu records -> %s\n", m.records.size(), synth_out.string().c_str());
    } else if (spl->parsed()) {
      data::SplitProportions p;
      char tail = 0;
      std::istringstream in(proportions);
      char c1 = 0, c2 = 0;
      if (!(in >> p.train >> c1 >> p.val >> c2 >> p.test) || c1 != ',' || c2 != ',' || (in >> tail)) {
        throw std::invalid_argument("--proportions expects train,val,test");
      }
      auto m = data::read_manifest(split_manifest);
      data::split_dataset(m, p, split_seed);
      data::write_manifest(split_manifest, m);
      print_counts(m);
    } else if (aug->parsed()) {
      auto m = data::read_manifest(aug_manifest);
      const auto added =
          data::augment_manifest(m, data::parse_policy(aug_policy), aug_seed, m.directory / "augmented");
      data::write_manifest(aug_manifest, m);
      std::printf("added %zu augmented train records\n", added);
    } else if (gtrain->parsed()) {
      auto config = gan_paper ? gan::GanConfig::paper() : gan::GanConfig::desk();
      if (!gan_config_file.empty()) gan::from_json(read_json_file(gan_config_file), config);
      if (gan_epochs) config.epochs = *gan_epochs;
      if (gan_seed) config.seed = *gan_seed;
      config.validate();
      const auto cls = data::parse_ship_class(gan_class);
      const auto mode = data::parse_mode(gan_mode);
      const auto m = data::read_manifest(gan_manifest);
      const auto tiles = class_tiles(m, cls, mode, config.tile_size, data::DbRange{});
      if (tiles.empty()) throw std::invalid_argument("no original train tiles for class " + gan_class);
      gan::GanPair pair(config, cls, mode);
      const auto t0 = std::chrono::steady_clock::now();
      pair.train(tiles, config.epochs, [&](const gan::EpochLoss& e) {
        if (e.epoch == 1 || e.epoch % 10 == 0 || e.epoch == config.epochs) {
          std::printf("epoch %zu  d_loss %.4f  g_loss %.4f  (%.0fs)\n", e.epoch, e.d_loss, e.g_loss,
                      seconds_since(t0));
          std::fflush(stdout);
        }
      });
      if (gan_out.has_parent_path()) fs::create_directories(gan_out.parent_path());
      write_checkpoint(gan_out, pair.to_checkpoint());
      auto csv = gan_out;
      csv.replace_extension(".csv");
      gan::write_loss_csv(csv, pair.history());
    } else if (greb->parsed()) {
      auto m = data::read_manifest(reb_manifest);
      std::vector<gan::GanPair> pairs;
      for (const auto& e : fs::directory_iterator(reb_gans)) {
        if (e.path().extension() == ".ckpt") pairs.push_back(gan::GanPair::from_checkpoint(read_checkpoint(e.path())));
      }
      if (pairs.empty()) throw std::invalid_argument("no GAN checkpoints in " + reb_gans.string());
      std::map<data::ShipClass, const gan::GanPair*> gans;
      const auto mode = pairs.front().mode();
      for (const auto& p : pairs) {
        if (p.mode() != mode) throw std::invalid_argument("GAN checkpoints mix polarization modes");
        if (!gans.emplace(p.ship_class(), &p).second) {
          throw std::invalid_argument("two GAN checkpoints for class " + data::to_string(p.ship_class()));
        }
      }
      const std::size_t target = reb_target.value_or(pairs.front().config().target_per_class);
      const auto stats = gan::rebalance(m, mode, gans, target, reb_seed, m.directory / "generated");
      data::write_manifest(reb_manifest, m);
      for (std::size_t c = 0; c < data::kNumClasses; ++c) {
        std::printf("%-14s %zu -> %zu (+%zu)\n", data::to_string(static_cast<data::ShipClass>(c)).c_str(),
                    stats.before[c], stats.after[c], stats.generated[c]);
      }
    } else if (trn->parsed()) {
      harness::TrainConfig config;
      if (train_paper) {
        config.capsnet = caps::CapsNetConfig::paper();
        config.cnn = cnn::CnnConfig::paper(config.head);
      }
      if (!train_config_file.empty()) harness::from_json(read_json_file(train_config_file), config);
      nlohmann::json flags = nlohmann::json::object();
      if (train_model) flags["model"] = *train_model;
      if (train_head) flags["head"] = *train_head;
      if (train_mode) flags["mode"] = *train_mode;
      if (train_aug) flags["augmentation"] = *train_aug;
      if (train_epochs) flags["epochs"] = *train_epochs;
      if (train_batch) flags["batch"] = *train_batch;
      if (train_lr) flags["optimizer"] = {{"lr", *train_lr}};
      if (train_decay) flags["lr_decay"] = *train_decay;
      if (train_seed) flags["seed"] = *train_seed;
      harness::from_json(flags, config);
      config.validate();
      const auto m = data::read_manifest(train_manifest);
      fs::create_directories(train_out);
      harness::write_json(train_out / "config.json", config);
      const auto t0 = std::chrono::steady_clock::now();
      const auto run = harness::run_training(m, config, train_out, [&](const harness::EpochRecord& r) {
        std::printf("epoch %3zu  loss %.4f  acc %.4f  val_loss %.4f  val_acc %.4f  lr %.6g  (%.0fs)\n", r.epoch,
                    r.train_loss, r.train_acc, r.val_loss, r.val_acc, r.lr, seconds_since(t0));
        std::fflush(stdout);
      });
      std::printf("best epoch %zu\n", run.training.best_epoch);
      if (run.test) std::printf("test accuracy %s\n", harness::format_accuracy(run.test->accuracy).c_str());
    } else if (evl->parsed()) {
      harness::TrainConfig stored;
      auto model = harness::load_model(read_checkpoint(eval_ckpt), &stored);
      const auto mode = eval_mode ? data::parse_mode(*eval_mode) : stored.mode;
      const auto report = harness::evaluate_manifest(*model, data::read_manifest(eval_manifest), mode, stored.db);
      std::printf("%s %s accuracy %s (%zu tiles)\n", report.architecture.c_str(),
                  harness::mode_column(mode).c_str(), harness::format_accuracy(report.accuracy).c_str(),
                  report.total);
      if (!eval_out.empty()) harness::write_json(eval_out, report);
    } else if (rep->parsed()) {
      const auto table = harness::build_report(harness::load_results(report_in));
      const auto text = harness::render_text(table);
      std::cout << text;
      if (!report_out.empty()) {
        if (report_out.has_parent_path()) fs::create_directories(report_out.parent_path());
        std::ofstream out(report_out);
        if (!out) throw std::runtime_error("cannot write " + report_out.string());
        out << (report_out.extension() == ".csv" ? harness::render_csv(table) : text);
      }
    } else if (grd->parsed()) {
      auto names = gradsuite::suite_names();
      if (grad_module != "all") names = {grad_module};
      bool ok = true;
      for (const auto& n : names) {
        const auto r = gradsuite::run_suite(n, grad_seeds);
        const bool pass = r.max_relative_error < 1e-4;
        ok = ok && pass;
        std::printf("%-20s seeds %zu  max rel err %.3e  %s\n", n.c_str(), r.seeds, r.max_relative_error,
                    pass ? "ok" : "FAIL");
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
