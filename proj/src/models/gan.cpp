#include "sarcaps/gan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "sarcaps/error.hpp"
#include "sarcaps/ops.hpp"
#include "sarcaps/random.hpp"

namespace sarcaps::gan {

GanConfig GanConfig::paper() { return GanConfig{}; }

GanConfig GanConfig::desk() {
  GanConfig c;
  c.tile_size = 32;
  c.epochs = 200;
  return c;
}

std::vector<std::size_t> GanConfig::generator_channels() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < deconv_layers; ++i) out.push_back(base_channels >> i);
  out.push_back(1);
  return out;
}

void GanConfig::validate() const {
  if (latent_dim == 0) throw std::invalid_argument("gan: latent_dim must be positive");
  if (epochs == 0 || batch == 0) throw std::invalid_argument("gan: epochs and batch must be positive");
  if (deconv_layers == 0 || kernel < 2) throw std::invalid_argument("gan: need deconv layers with kernel >= 2");
  if (deconv_layers >= 16 || (base_channels >> (deconv_layers - 1)) == 0) {
    throw std::invalid_argument("gan: base_channels too small for the layer count");
  }
  if (tile_size == 0 || base_grid() == 0 || (base_grid() << deconv_layers) != tile_size) {
    throw std::invalid_argument("gan: tile_size must be base_grid * 2^deconv_layers");
  }
  if (!(adam.lr > 0)) throw std::invalid_argument("gan: learning rate must be positive");
}

void to_json(nlohmann::json& j, const GanConfig& c) {
  j = nlohmann::json{{"latent_dim", c.latent_dim},
                     {"tile_size", c.tile_size},
                     {"base_channels", c.base_channels},
                     {"deconv_layers", c.deconv_layers},
                     {"kernel", c.kernel},
                     {"epochs", c.epochs},
                     {"batch", c.batch},
                     {"adam", {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
                     {"leaky_slope", c.leaky_slope},
                     {"target_per_class", c.target_per_class},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, GanConfig& c) {
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.tile_size = j.value("tile_size", c.tile_size);
  c.base_channels = j.value("base_channels", c.base_channels);
  c.deconv_layers = j.value("deconv_layers", c.deconv_layers);
  c.kernel = j.value("kernel", c.kernel);
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    c.adam.lr = a.value("lr", c.adam.lr);
    c.adam.beta1 = a.value("beta1", c.adam.beta1);
    c.adam.beta2 = a.value("beta2", c.adam.beta2);
    c.adam.eps = a.value("eps", c.adam.eps);
  }
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.target_per_class = j.value("target_per_class", c.target_per_class);
  c.seed = j.value("seed", c.seed);
}

namespace {

constexpr double kInitStd = 0.02;

template <typename T>
Tensor<T> normal_parameter(Shape shape, Rng& rng) {
  const std::size_t n = numel(shape);
  auto values = standard_normal<T>(n, rng);
  for (auto& v : values) v *= static_cast<T>(kInitStd);
  return Tensor<T>(std::move(shape), std::move(values), true);
}

}  // namespace

template <typename T>
Generator<T>::Generator(const GanConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t b = config_.base_grid();
  dense_w_ = normal_parameter<T>({config_.latent_dim, b * b * config_.base_channels}, rng);
  dense_b_ = zero_parameter<T>({b * b * config_.base_channels});
  const auto ch = config_.generator_channels();
  for (std::size_t i = 0; i < config_.deconv_layers; ++i) {
    kernels_.push_back(normal_parameter<T>({config_.kernel, config_.kernel, ch[i + 1], ch[i]}, rng));
    biases_.push_back(zero_parameter<T>({ch[i + 1]}));
  }
}

template <typename T>
Tensor<T> Generator<T>::forward(const Tensor<T>& z) const {
  if (z.rank() != 2 || z.dim(1) != config_.latent_dim) {
    throw ShapeError("generator: expected [N, " + std::to_string(config_.latent_dim) + "] latent, got " +
                     to_string(z.shape()));
  }
  const std::size_t n = z.dim(0), b = config_.base_grid();
  Tensor<T> h = ops::reshape(ops::linear(z, dense_w_, dense_b_), Shape{n, b, b, config_.base_channels});
  h = ops::relu(ops::instance_norm(h));
  std::size_t side = b;
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    side *= 2;
    h = ops::center_crop2d(ops::conv_transpose2d(h, kernels_[i], 2), side, side);
    h = ops::add_bias(h, biases_[i]);
    h = i + 1 < kernels_.size() ? ops::relu(ops::instance_norm(h)) : ops::tanh(h);
  }
  return h;
}

template <typename T>
std::vector<std::size_t> Generator<T>::spatial_sizes() const {
  std::vector<std::size_t> out{config_.base_grid()};
  for (std::size_t i = 0; i < config_.deconv_layers; ++i) out.push_back(out.back() * 2);
  return out;
}

template <typename T>
std::vector<NamedParameter<T>> Generator<T>::parameters() const {
  std::vector<NamedParameter<T>> out{{"dense.weight", dense_w_}, {"dense.bias", dense_b_}};
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    out.push_back({"deconv" + std::to_string(i) + ".kernels", kernels_[i]});
    out.push_back({"deconv" + std::to_string(i) + ".bias", biases_[i]});
  }
  return out;
}

template <typename T>
Discriminator<T>::Discriminator(const GanConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  auto ch = config_.generator_channels();
  std::reverse(ch.begin(), ch.end());
  for (std::size_t i = 0; i < config_.deconv_layers; ++i) {
    kernels_.push_back(normal_parameter<T>({config_.kernel, config_.kernel, ch[i], ch[i + 1]}, rng));
    biases_.push_back(zero_parameter<T>({ch[i + 1]}));
  }
  const std::size_t b = config_.base_grid();
  dense_w_ = normal_parameter<T>({b * b * config_.base_channels, 1}, rng);
  dense_b_ = zero_parameter<T>({1});
}

template <typename T>
Tensor<T> Discriminator<T>::logits(const Tensor<T>& tiles) const {
  const std::size_t s = config_.tile_size;
  if (tiles.rank() != 4 || tiles.dim(1) != s || tiles.dim(2) != s || tiles.dim(3) != 1) {
    throw ShapeError("discriminator: expected [N, " + std::to_string(s) + ", " + std::to_string(s) +
                     ", 1] tiles, got " + to_string(tiles.shape()));
  }
  const std::size_t pad = (config_.kernel - 2) / 2;
  Tensor<T> h = tiles;
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    h = ops::add_bias(ops::conv2d(ops::pad2d(h, pad), kernels_[i], 2), biases_[i]);
    if (i > 0) h = ops::instance_norm(h);
    h = ops::leaky_relu(h, static_cast<T>(config_.leaky_slope));
  }
  const std::size_t b = config_.base_grid();
  h = ops::reshape(h, Shape{tiles.dim(0), b * b * config_.base_channels});
  return ops::linear(h, dense_w_, dense_b_);
}

template <typename T>
std::vector<T> Discriminator<T>::probability(const Tensor<T>& tiles) const {
  NoGradGuard no_grad;
  return ops::sigmoid(logits(tiles)).to_vector();
}

template <typename T>
std::vector<std::size_t> Discriminator<T>::spatial_sizes() const {
  std::vector<std::size_t> out{config_.tile_size};
  for (std::size_t i = 0; i < config_.deconv_layers; ++i) out.push_back(out.back() / 2);
  return out;
}

template <typename T>
std::vector<NamedParameter<T>> Discriminator<T>::parameters() const {
  std::vector<NamedParameter<T>> out;
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    out.push_back({"conv" + std::to_string(i) + ".kernels", kernels_[i]});
    out.push_back({"conv" + std::to_string(i) + ".bias", biases_[i]});
  }
  out.push_back({"dense.weight", dense_w_});
  out.push_back({"dense.bias", dense_b_});
  return out;
}

template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;

namespace {

template <typename T>
std::vector<Tensor<T>> tensors_of(const std::vector<NamedParameter<T>>& params) {
  std::vector<Tensor<T>> out;
  for (const auto& p : params) out.push_back(p.tensor);
  return out;
}

Tensor<float> sample_latent(std::size_t count, std::size_t dim, Rng& rng) {
  return Tensor<float>({count, dim}, standard_normal<float>(count * dim, rng));
}

}  // namespace

GanPair::GanPair(GanConfig config, data::ShipClass ship_class, data::PolarizationMode mode)
    : config_(std::move(config)),
      ship_class_(ship_class),
      mode_(mode),
      init_rng_(make_rng(config_.seed, 0x6A40 + static_cast<std::uint64_t>(ship_class))),
      generator_(config_, init_rng_),
      discriminator_(config_, init_rng_),
      g_opt_(tensors_of(generator_.parameters()), config_.adam),
      d_opt_(tensors_of(discriminator_.parameters()), config_.adam),
      train_rng_(make_rng(config_.seed, 0x6A50 + static_cast<std::uint64_t>(ship_class))) {}

double GanPair::discriminator_step(const Tensor<float>& real, const Tensor<float>& fake) {
  d_opt_.zero_grad();
  auto d_real = ops::bce_with_logits(discriminator_.logits(real), 1.0f);
  auto d_fake = ops::bce_with_logits(discriminator_.logits(fake.detach()), 0.0f);
  auto d_loss = ops::scale(ops::add(d_real, d_fake), 0.5f);
  backward(d_loss);
  d_opt_.step();
  d_opt_.zero_grad();
  return d_loss.item();
}

double GanPair::generator_step(const Tensor<float>& z) {
  g_opt_.zero_grad();
  auto g_loss = ops::bce_with_logits(discriminator_.logits(generator_.forward(z)), 1.0f);
  backward(g_loss);
  g_opt_.step();
  g_opt_.zero_grad();
  d_opt_.zero_grad();
  return g_loss.item();
}

GanPair::StepLoss GanPair::train_step(const Tensor<float>& real, Rng& rng) {
  if (real.rank() != 4 || real.dim(0) == 0) throw std::invalid_argument("gan_train_step: empty batch");
  const std::size_t n = real.dim(0);
  Tensor<float> fake;
  {
    NoGradGuard no_grad;
    fake = generator_.forward(sample_latent(n, config_.latent_dim, rng));
  }
  const double d_loss = discriminator_step(real, fake);
  const double g_loss = generator_step(sample_latent(n, config_.latent_dim, rng));
  return {d_loss, g_loss};
}

void GanPair::train(const std::vector<std::vector<float>>& real, std::size_t epochs,
                    const std::function<void(const EpochLoss&)>& on_epoch) {
  if (real.empty()) throw std::invalid_argument("gan train: no real tiles");
  const std::size_t s = config_.tile_size;
  for (const auto& t : real) {
    if (t.size() != s * s) throw ShapeError("gan train: tile size does not match the configuration");
  }
  std::vector<std::size_t> order(real.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), train_rng_);
    double d_sum = 0, g_sum = 0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config_.batch) {
      const std::size_t end = std::min(order.size(), begin + config_.batch);
      std::vector<float> values;
      values.reserve((end - begin) * s * s);
      for (std::size_t k = begin; k < end; ++k) values.insert(values.end(), real[order[k]].begin(), real[order[k]].end());
      const auto loss = train_step(Tensor<float>({end - begin, s, s, 1}, std::move(values)), train_rng_);
      d_sum += loss.d_loss;
      g_sum += loss.g_loss;
      ++batches;
    }
    EpochLoss rec{history_.size() + 1, d_sum / static_cast<double>(batches), g_sum / static_cast<double>(batches)};
    history_.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
}

Tensor<float> GanPair::generate(std::size_t count, Rng& rng) const {
  NoGradGuard no_grad;
  if (count == 0) return Tensor<float>({0, config_.tile_size, config_.tile_size, 1}, {});
  return generator_.forward(sample_latent(count, config_.latent_dim, rng));
}

Checkpoint GanPair::to_checkpoint() const {
  Checkpoint ck;
  ck.meta = {{"kind", "gan"},
             {"class", data::to_string(ship_class_)},
             {"mode", data::to_string(mode_)},
             {"config", config_}};
  auto hist = nlohmann::json::array();
  for (const auto& h : history_) hist.push_back({h.epoch, h.d_loss, h.g_loss});
  ck.meta["history"] = hist;
  for (const auto& [prefix, params] :
       {std::pair{std::string("generator."), generator_.parameters()},
        std::pair{std::string("discriminator."), discriminator_.parameters()}}) {
    for (auto t : store_parameters(params)) {
      t.name = prefix + t.name;
      ck.tensors.push_back(std::move(t));
    }
  }
  return ck;
}

GanPair GanPair::from_checkpoint(const Checkpoint& checkpoint) {
  const auto& meta = checkpoint.meta;
  if (meta.value("kind", std::string()) != "gan") throw FormatError("checkpoint does not hold a GAN");
  GanConfig config = GanConfig::paper();
  from_json(meta.at("config"), config);
  GanPair pair(config, data::parse_ship_class(meta.at("class").get<std::string>()),
               data::parse_mode(meta.at("mode").get<std::string>()));
  for (const auto& [prefix, params] :
       {std::pair{std::string("generator."), pair.generator_.parameters()},
        std::pair{std::string("discriminator."), pair.discriminator_.parameters()}}) {
    Checkpoint part;
    for (const auto& t : checkpoint.tensors) {
      if (t.name.rfind(prefix, 0) == 0) part.tensors.push_back({t.name.substr(prefix.size()), t.shape, t.values});
    }
    load_parameters(part, params);
  }
  for (const auto& h : meta.value("history", nlohmann::json::array())) {
    pair.history_.push_back({h.at(0).get<std::size_t>(), h.at(1).get<double>(), h.at(2).get<double>()});
  }
  return pair;
}

std::vector<float> to_signed(const std::vector<float>& unit) {
  std::vector<float> out(unit.size());
  std::transform(unit.begin(), unit.end(), out.begin(), [](float u) { return u * 2.0f - 1.0f; });
  return out;
}

std::vector<float> to_unit(const std::vector<float>& signed_values) {
  std::vector<float> out(signed_values.size());
  std::transform(signed_values.begin(), signed_values.end(), out.begin(),
                 [](float v) { return std::clamp((v + 1.0f) * 0.5f, 0.0f, 1.0f); });
  return out;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLoss>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,d_loss,g_loss\n";
  char line[128];
  for (const auto& h : history) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g\n", h.epoch, h.d_loss, h.g_loss);
    out << line;
  }
}

RebalanceStats rebalance(data::Manifest& manifest, data::PolarizationMode mode,
                         const std::map<data::ShipClass, const GanPair*>& gans, std::size_t target,
                         std::uint64_t seed, const std::filesystem::path& tile_dir, const data::DbRange& db) {
  RebalanceStats stats;
  stats.before = manifest.class_counts(data::Split::train, mode);
  for (std::size_t c = 0; c < data::kNumClasses; ++c) {
    const auto cls = static_cast<data::ShipClass>(c);
    if (stats.before[c] < target && !gans.count(cls)) {
      throw std::invalid_argument("rebalance: no GAN for deficient class " + data::to_string(cls));
    }
  }
  std::filesystem::create_directories(tile_dir);
  for (std::size_t c = 0; c < data::kNumClasses; ++c) {
    const auto cls = static_cast<data::ShipClass>(c);
    if (stats.before[c] >= target) continue;
    const GanPair& gan = *gans.at(cls);
    const std::size_t need = target - stats.before[c];
    const std::size_t existing = static_cast<std::size_t>(std::count_if(
        manifest.records.begin(), manifest.records.end(),
        [&](const data::TileRecord& r) { return r.synthetic && r.ship_class == cls; }));
    Rng rng = make_rng(seed, 0x4EBA + c);
    const auto tiles = gan.generate(need, rng);
    const std::size_t s = gan.config().tile_size;
    for (std::size_t k = 0; k < need; ++k) {
      const auto span = tiles.data().subspan(k * s * s, s * s);
      data::Polarization pol = mode == data::PolarizationMode::VV ? data::Polarization::VV : data::Polarization::VH;
      if (mode == data::PolarizationMode::VHVV && (existing + k) % 2 == 1) pol = data::Polarization::VV;
      const auto tile = data::denormalize_tile(to_unit({span.begin(), span.end()}), s, s, pol, db);
      char name[96];
      std::snprintf(name, sizeof name, "gan_%s_%06zu_%s", data::to_string(cls).c_str(), existing + k,
                    data::to_string(pol).c_str());
      const auto file = tile_dir / (std::string(name) + ".sart");
      data::write_tile(file, tile);
      data::TileRecord r;
      r.id = name;
      const auto rel = file.lexically_relative(manifest.directory);
      r.path = (rel.empty() ? file : rel).generic_string();
      r.ship_class = cls;
      r.polarization = pol;
      r.split = data::Split::train;
      r.synthetic = true;
      r.elaborated_type = "generated";
      manifest.records.push_back(std::move(r));
    }
    stats.generated[c] = need;
  }
  stats.after = manifest.class_counts(data::Split::train, mode);
  return stats;
}

}  // namespace sarcaps::gan
