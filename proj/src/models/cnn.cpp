#include "sarcaps/cnn.hpp"

#include <algorithm>
#include <stdexcept>

#include "sarcaps/error.hpp"
#include "sarcaps/ops.hpp"
#include "sarcaps/random.hpp"

namespace sarcaps::cnn {

std::string to_string(Head head) { return head == Head::S ? "S" : "L"; }

Head parse_head(const std::string& text) {
  if (text == "S" || text == "s") return Head::S;
  if (text == "L" || text == "l") return Head::L;
  throw std::invalid_argument("unknown CNN head '" + text + "' (expected S or L)");
}

CnnConfig CnnConfig::paper(Head head) {
  CnnConfig c;
  c.head = head;
  return c;
}

CnnConfig CnnConfig::desk(Head head) {
  CnnConfig c = paper(head);
  c.input_size = 64;
  return c;
}

std::vector<std::size_t> CnnConfig::head_widths() const {
  if (head == Head::S) return {32, 16, num_classes};
  return {1024, 512, num_classes};
}

std::size_t CnnConfig::feature_grid() const {
  std::size_t grid = input_size;
  for (const auto& b : conv_blocks) {
    if (b.kernel > grid) throw std::invalid_argument("cnn: kernel larger than feature map");
    grid = (grid - b.kernel) / b.stride + 1;
  }
  return grid;
}

std::size_t CnnConfig::feature_count() const {
  const std::size_t grid = feature_grid();
  return grid * grid * conv_blocks.back().out_channels;
}

void CnnConfig::validate() const {
  if (conv_blocks.empty()) throw std::invalid_argument("cnn: at least one conv block required");
  if (input_size == 0 || num_classes == 0) throw std::invalid_argument("cnn: sizes must be positive");
  for (const auto& b : conv_blocks) {
    if (b.out_channels == 0 || b.kernel == 0 || b.stride == 0) {
      throw std::invalid_argument("cnn: conv block fields must be positive");
    }
  }
  feature_grid();
}

void to_json(nlohmann::json& j, const CnnConfig& c) {
  j = nlohmann::json{{"input_size", c.input_size}, {"head", to_string(c.head)}, {"num_classes", c.num_classes}};
  auto blocks = nlohmann::json::array();
  for (const auto& b : c.conv_blocks) {
    blocks.push_back({{"out_channels", b.out_channels}, {"kernel", b.kernel}, {"stride", b.stride}});
  }
  j["conv_blocks"] = blocks;
}

void from_json(const nlohmann::json& j, CnnConfig& c) {
  c.input_size = j.value("input_size", c.input_size);
  c.num_classes = j.value("num_classes", c.num_classes);
  if (j.contains("head")) c.head = parse_head(j.at("head").get<std::string>());
  if (j.contains("conv_blocks")) {
    c.conv_blocks.clear();
    for (const auto& b : j.at("conv_blocks")) {
      c.conv_blocks.push_back({b.at("out_channels").get<std::size_t>(), b.value("kernel", std::size_t{3}),
                               b.value("stride", std::size_t{2})});
    }
  }
}

template <typename T>
Cnn<T>::Cnn(CnnConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng backbone_rng = make_rng(seed, 0xB0B);
  std::size_t channels = 1;
  for (const auto& b : config_.conv_blocks) {
    conv_kernels_.push_back(he_parameter<T>({b.kernel, b.kernel, channels, b.out_channels},
                                            b.kernel * b.kernel * channels, backbone_rng));
    conv_biases_.push_back(zero_parameter<T>({b.out_channels}));
    channels = b.out_channels;
  }
  Rng head_rng = make_rng(seed, 0x4EAD);
  std::size_t fan_in = config_.feature_count();
  for (std::size_t width : config_.head_widths()) {
    dense_weights_.push_back(he_parameter<T>({fan_in, width}, fan_in, head_rng));
    dense_biases_.push_back(zero_parameter<T>({width}));
    fan_in = width;
  }
}

template <typename T>
nlohmann::json Cnn<T>::config_json() const {
  return config_;
}

template <typename T>
std::vector<NamedParameter<T>> Cnn<T>::parameters() const {
  std::vector<NamedParameter<T>> out;
  for (std::size_t i = 0; i < conv_kernels_.size(); ++i) {
    out.push_back({"conv" + std::to_string(i) + ".kernels", conv_kernels_[i]});
    out.push_back({"conv" + std::to_string(i) + ".bias", conv_biases_[i]});
  }
  for (std::size_t i = 0; i < dense_weights_.size(); ++i) {
    out.push_back({"dense" + std::to_string(i) + ".weight", dense_weights_[i]});
    out.push_back({"dense" + std::to_string(i) + ".bias", dense_biases_[i]});
  }
  return out;
}

template <typename T>
Tensor<T> Cnn<T>::logits(const Tensor<T>& images) const {
  if (images.rank() != 4 || images.dim(1) != config_.input_size ||
      images.dim(2) != config_.input_size || images.dim(3) != 1) {
    throw ShapeError("cnn: expected [N, " + std::to_string(config_.input_size) + ", " +
                     std::to_string(config_.input_size) + ", 1] images, got " +
                     sarcaps::to_string(images.shape()));
  }
  Tensor<T> h = images;
  for (std::size_t i = 0; i < conv_kernels_.size(); ++i) {
    h = ops::relu(ops::add_bias(ops::conv2d(h, conv_kernels_[i], config_.conv_blocks[i].stride),
                                conv_biases_[i]));
  }
  h = ops::reshape(h, Shape{images.dim(0), config_.feature_count()});
  for (std::size_t i = 0; i < dense_weights_.size(); ++i) {
    h = ops::linear(h, dense_weights_[i], dense_biases_[i]);
    if (i + 1 < dense_weights_.size()) h = ops::relu(h);
  }
  return h;
}

template <typename T>
Tensor<T> Cnn<T>::forward(const Tensor<T>& images) const {
  return ops::softmax(logits(images), 1);
}

namespace {
template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& probs) {
  const std::size_t n = probs.dim(0), k = probs.dim(1);
  std::vector<int> out(n);
  for (std::size_t b = 0; b < n; ++b) {
    const auto row = probs.data().subspan(b * k, k);
    out[b] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}
}  // namespace

template <typename T>
BatchResult<T> Cnn<T>::run_batch(const Tensor<T>& images, const std::vector<int>& labels) {
  auto probs = forward(images);
  return {ops::cross_entropy(probs, labels), argmax_rows(probs)};
}

template <typename T>
std::vector<int> Cnn<T>::predict(const Tensor<T>& images) {
  NoGradGuard no_grad;
  return argmax_rows(forward(images));
}

template class Cnn<float>;
template class Cnn<double>;

}  // namespace sarcaps::cnn
