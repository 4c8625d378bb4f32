#pragma once

// Class-specialised DCGAN used to rebalance the training split.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "sarcaps/checkpoint.hpp"
#include "sarcaps/data.hpp"
#include "sarcaps/optim.hpp"
#include "sarcaps/tensor.hpp"

namespace sarcaps::gan {

struct GanConfig {
  std::size_t latent_dim = 100;
  std::size_t tile_size = 128;
  std::size_t base_channels = 256;  // channels of the projected base grid
  std::size_t deconv_layers = 4;
  std::size_t kernel = 4;
  std::size_t epochs = 2000;
  std::size_t batch = 32;
  AdamConfig adam{0.002, 0.5, 0.999, 1e-8};
  double leaky_slope = 0.2;
  std::size_t target_per_class = 2000;
  std::uint64_t seed = 1;

  static GanConfig paper();
  /// 32x32 tiles, 200 epochs.
  static GanConfig desk();

  std::size_t base_grid() const { return tile_size >> deconv_layers; }
  /// Channel count entering each generator deconv layer, then the output's 1.
  std::vector<std::size_t> generator_channels() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const GanConfig& c);
void from_json(const nlohmann::json& j, GanConfig& c);

/// dense -> [b, b, C] -> instance norm, relu -> deconv_layers x (k4 s2 transposed
/// conv, centre crop to 2x) with instance norm + relu between layers -> tanh.
template <typename T>
class Generator {
 public:
  Generator(const GanConfig& config, Rng& rng);

  /// z [N, latent] -> tiles [N, S, S, 1] in (-1, 1).
  Tensor<T> forward(const Tensor<T>& z) const;
  /// Per-layer spatial sides, base grid first.
  std::vector<std::size_t> spatial_sizes() const;
  std::vector<NamedParameter<T>> parameters() const;

 private:
  GanConfig config_;
  Tensor<T> dense_w_, dense_b_;
  std::vector<Tensor<T>> kernels_, biases_;
};

/// Mirror image of the generator: deconv_layers x (pad 1, k4 s2 conv) with
/// leaky relu (instance norm after the first) -> dense -> one logit.
template <typename T>
class Discriminator {
 public:
  Discriminator(const GanConfig& config, Rng& rng);

  /// tiles [N, S, S, 1] -> logits [N, 1].
  Tensor<T> logits(const Tensor<T>& tiles) const;
  /// sigmoid(logits) as plain values.
  std::vector<T> probability(const Tensor<T>& tiles) const;
  std::vector<std::size_t> spatial_sizes() const;
  std::vector<NamedParameter<T>> parameters() const;

 private:
  GanConfig config_;
  std::vector<Tensor<T>> kernels_, biases_;
  Tensor<T> dense_w_, dense_b_;
};

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  double d_loss = 0, g_loss = 0;
};

/// Generator/discriminator pair for one ship class with their optimisers.
class GanPair {
 public:
  GanPair(GanConfig config, data::ShipClass ship_class, data::PolarizationMode mode);

  const GanConfig& config() const { return config_; }
  data::ShipClass ship_class() const { return ship_class_; }
  data::PolarizationMode mode() const { return mode_; }
  Generator<float>& generator() { return generator_; }
  Discriminator<float>& discriminator() { return discriminator_; }
  const std::vector<EpochLoss>& history() const { return history_; }

  struct StepLoss {
    double d_loss, g_loss;
  };

  /// One discriminator update (real -> 1, generated -> 0) followed by one
  /// generator update through the unchanged discriminator (generated -> 1).
  /// `real` holds tiles scaled to [-1, 1].
  StepLoss train_step(const Tensor<float>& real, Rng& rng);
  /// Discriminator half of a step; returns d_loss.
  double discriminator_step(const Tensor<float>& real, const Tensor<float>& fake);
  /// Generator half of a step for latents z; the discriminator's parameters
  /// are left untouched. Returns g_loss.
  double generator_step(const Tensor<float>& z);

  /// Shuffled mini-batches over `real` per epoch; appends to history().
  void train(const std::vector<std::vector<float>>& real, std::size_t epochs,
             const std::function<void(const EpochLoss&)>& on_epoch = {});

  /// count tiles in [-1, 1], shape [count, S, S, 1].
  Tensor<float> generate(std::size_t count, Rng& rng) const;

  Checkpoint to_checkpoint() const;
  static GanPair from_checkpoint(const Checkpoint& checkpoint);

 private:
  GanConfig config_;
  data::ShipClass ship_class_;
  data::PolarizationMode mode_;
  Rng init_rng_;
  Generator<float> generator_;
  Discriminator<float> discriminator_;
  Adam<float> g_opt_, d_opt_;
  Rng train_rng_;
  std::vector<EpochLoss> history_;
};

/// [0, 1] -> [-1, 1] and back.
std::vector<float> to_signed(const std::vector<float>& unit);
std::vector<float> to_unit(const std::vector<float>& signed_values);

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLoss>& history);

struct RebalanceStats {
  std::array<std::size_t, data::kNumClasses> before{}, generated{}, after{};
};

/// Appends target - n generated train tiles for every class with n < target
/// in the train split under `mode`. Tiles are denormalised to sigma0, written
/// under `tile_dir` and tagged synthetic. Classes at or above target are left
/// alone. Throws when a deficient class has no generator in `gans`.
RebalanceStats rebalance(data::Manifest& manifest, data::PolarizationMode mode,
                         const std::map<data::ShipClass, const GanPair*>& gans, std::size_t target,
                         std::uint64_t seed, const std::filesystem::path& tile_dir,
                         const data::DbRange& db = {});

}  // namespace sarcaps::gan
