#include "sarcaps/capsnet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sarcaps/kernels.hpp"
#include "sarcaps/ops.hpp"
#include "sarcaps/random.hpp"

namespace sarcaps::caps {

namespace {
constexpr double kZeroNorm = 1e-9;

struct AxisLayout {
  std::size_t outer, len, inner;
};

template <typename T>
AxisLayout layout_of(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) throw ShapeError("axis out of range for " + to_string(x.shape()));
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.dim(d);
  return {x.size() / (x.dim(axis) * inner), x.dim(axis), inner};
}
}  // namespace

CapsNetConfig CapsNetConfig::paper() { return CapsNetConfig{}; }

CapsNetConfig CapsNetConfig::desk() {
  CapsNetConfig c;
  c.input_size = 64;
  c.conv1.stride = 2;
  return c;
}

std::size_t CapsNetConfig::conv1_grid() const {
  return (input_size - conv1.size) / conv1.stride + 1;
}

std::size_t CapsNetConfig::primary_grid() const {
  return (conv1_grid() - primary.size) / primary.stride + 1;
}

std::size_t CapsNetConfig::num_primary() const {
  const auto g = primary_grid();
  return g * g * primary.channels;
}

void CapsNetConfig::validate() const {
  const auto positive = {input_size,        conv1.kernels,   conv1.size,      conv1.stride,
                         primary.channels,  primary.caps_dim, primary.size,   primary.stride,
                         class_caps.count,  class_caps.dim};
  for (auto v : positive) {
    if (v == 0) throw std::invalid_argument("capsnet config: counts must be positive");
  }
  if (routing_iterations < 1) throw std::invalid_argument("capsnet config: routing_iterations < 1");
  if (!(m_minus < m_plus)) throw std::invalid_argument("capsnet config: need m_minus < m_plus");
  if (recon_scale < 0) throw std::invalid_argument("capsnet config: recon_scale < 0");
  if (conv1.size > input_size) throw std::invalid_argument("capsnet config: conv1 larger than input");
  if (primary.size > conv1_grid()) {
    throw std::invalid_argument("capsnet config: primary kernel larger than conv1 output");
  }
}

void to_json(nlohmann::json& j, const CapsNetConfig& c) {
  j = nlohmann::json{
      {"input_size", c.input_size},
      {"conv1", {{"kernels", c.conv1.kernels}, {"size", c.conv1.size}, {"stride", c.conv1.stride}}},
      {"primary",
       {{"channels", c.primary.channels},
        {"caps_dim", c.primary.caps_dim},
        {"size", c.primary.size},
        {"stride", c.primary.stride}}},
      {"class_caps", {{"count", c.class_caps.count}, {"dim", c.class_caps.dim}}},
      {"routing_iterations", c.routing_iterations},
      {"recon_scale", c.recon_scale},
      {"m_plus", c.m_plus},
      {"m_minus", c.m_minus},
      {"lambda", c.lambda},
      {"decoder_hidden", c.decoder_hidden},
      {"routing_init_std", c.routing_init_std},
      {"routing_gradient", c.routing_gradient == RoutingGradient::full ? "full" : "final_only"},
  };
}

void from_json(const nlohmann::json& j, CapsNetConfig& c) {
  auto get = [&](const nlohmann::json& obj, const char* key, auto& field) {
    if (obj.contains(key)) obj.at(key).get_to(field);
  };
  get(j, "input_size", c.input_size);
  if (j.contains("conv1")) {
    const auto& s = j.at("conv1");
    get(s, "kernels", c.conv1.kernels);
    get(s, "size", c.conv1.size);
    get(s, "stride", c.conv1.stride);
  }
  if (j.contains("primary")) {
    const auto& s = j.at("primary");
    get(s, "channels", c.primary.channels);
    get(s, "caps_dim", c.primary.caps_dim);
    get(s, "size", c.primary.size);
    get(s, "stride", c.primary.stride);
  }
  if (j.contains("class_caps")) {
    get(j.at("class_caps"), "count", c.class_caps.count);
    get(j.at("class_caps"), "dim", c.class_caps.dim);
  }
  get(j, "routing_iterations", c.routing_iterations);
  get(j, "recon_scale", c.recon_scale);
  get(j, "m_plus", c.m_plus);
  get(j, "m_minus", c.m_minus);
  get(j, "lambda", c.lambda);
  get(j, "decoder_hidden", c.decoder_hidden);
  get(j, "routing_init_std", c.routing_init_std);
  if (j.contains("routing_gradient")) {
    const auto mode = j.at("routing_gradient").get<std::string>();
    if (mode == "full") {
      c.routing_gradient = RoutingGradient::full;
    } else if (mode == "final_only") {
      c.routing_gradient = RoutingGradient::final_only;
    } else {
      throw std::invalid_argument("unknown routing_gradient '" + mode + "'");
    }
  }
}

template <typename T>
Tensor<T> squash(const Tensor<T>& s, std::size_t axis) {
  const auto [outer, len, inner] = layout_of(s, axis);
  const auto x = s.data();
  std::vector<T> out(s.size());
  std::vector<T> norms(outer * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      T sq = 0;
      for (std::size_t l = 0; l < len; ++l) sq += x[base + l * inner] * x[base + l * inner];
      const T n = std::sqrt(sq);
      norms[o * inner + i] = n;
      // s * |s| / (1 + |s|^2) is the same map written without the division by |s|.
      const T factor = n / (T(1) + sq);
      for (std::size_t l = 0; l < len; ++l) out[base + l * inner] = x[base + l * inner] * factor;
    }
  }
  return make_result<T>(
      s.shape(), std::move(out), "squash", {s},
      [outer, len, inner, norms = std::move(norms)](Node<T>& self) {
        auto& in = *self.inputs[0];
        auto g = in.grad_buffer();
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = o * len * inner + i;
            const T n = norms[o * inner + i];
            const T sq = n * n;
            const T factor = n / (T(1) + sq);
            // dv_l/ds_k = factor delta_lk + s_l s_k (1 - n^2) / (n (1 + n^2)^2)
            T dot = 0;
            for (std::size_t l = 0; l < len; ++l) {
              dot += self.grad[base + l * inner] * in.value[base + l * inner];
            }
            const T radial = n > T(kZeroNorm) ? (T(1) - sq) / (n * (T(1) + sq) * (T(1) + sq)) : T(0);
            for (std::size_t l = 0; l < len; ++l) {
              const std::size_t at = base + l * inner;
              g[at] += factor * self.grad[at] + radial * dot * in.value[at];
            }
          }
        }
      });
}

template <typename T>
Tensor<T> capsule_norm(const Tensor<T>& v) {
  const std::size_t d = v.shape().back();
  const std::size_t rows = v.size() / d;
  Shape shape(v.shape().begin(), v.shape().end() - 1);
  if (shape.empty()) shape = {1};
  std::vector<T> out(rows);
  const auto x = v.data();
  for (std::size_t r = 0; r < rows; ++r) {
    T sq = 0;
    for (std::size_t k = 0; k < d; ++k) sq += x[r * d + k] * x[r * d + k];
    out[r] = std::sqrt(sq);
  }
  return make_result<T>(std::move(shape), std::move(out), "capsule_norm", {v},
                        [d, rows](Node<T>& self) {
                          auto& in = *self.inputs[0];
                          auto g = in.grad_buffer();
                          for (std::size_t r = 0; r < rows; ++r) {
                            const T n = self.value[r];
                            if (n <= T(kZeroNorm)) continue;
                            const T scale = self.grad[r] / n;
                            for (std::size_t k = 0; k < d; ++k) g[r * d + k] += scale * in.value[r * d + k];
                          }
                        });
}

template <typename T>
Tensor<T> capsule_predictions(const Tensor<T>& u, const Tensor<T>& weights) {
  if (u.rank() != 3 || weights.rank() != 4 || weights.dim(0) != u.dim(1) ||
      weights.dim(2) != u.dim(2)) {
    throw ShapeError("capsule_predictions: u " + to_string(u.shape()) + " vs W " +
                     to_string(weights.shape()));
  }
  const kernels::CapsuleGeometry g{u.dim(0), u.dim(1), weights.dim(1), u.dim(2), weights.dim(3)};
  std::vector<T> out(g.batch * g.primary * g.classes * g.out_dim);
  kernels::capsule_predict_forward<T>(g, u.data().data(), weights.data().data(), out.data());
  return make_result<T>(Shape{g.batch, g.primary, g.classes, g.out_dim}, std::move(out),
                        "capsule_predictions", {u, weights}, [g](Node<T>& self) {
                          auto& uu = *self.inputs[0];
                          auto& w = *self.inputs[1];
                          kernels::capsule_predict_backward<T>(
                              g, uu.value.data(), w.value.data(), self.grad.data(),
                              uu.requires_grad ? uu.grad_buffer().data() : nullptr,
                              w.requires_grad ? w.grad_buffer().data() : nullptr);
                        });
}

template <typename T>
Tensor<T> weighted_capsule_sum(const Tensor<T>& couplings, const Tensor<T>& u_hat) {
  if (u_hat.rank() != 4 || couplings.rank() != 3 || couplings.dim(0) != u_hat.dim(0) ||
      couplings.dim(1) != u_hat.dim(1) || couplings.dim(2) != u_hat.dim(2)) {
    throw ShapeError("weighted_capsule_sum: c " + to_string(couplings.shape()) + " vs u_hat " +
                     to_string(u_hat.shape()));
  }
  const std::size_t n = u_hat.dim(0), p = u_hat.dim(1), j = u_hat.dim(2), d = u_hat.dim(3);
  std::vector<T> out(n * j * d, T(0));
  const auto c = couplings.data();
  const auto uh = u_hat.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t k = 0; k < j; ++k) {
        const T cw = c[(b * p + i) * j + k];
        const T* src = uh.data() + ((b * p + i) * j + k) * d;
        T* dst = out.data() + (b * j + k) * d;
        for (std::size_t e = 0; e < d; ++e) dst[e] += cw * src[e];
      }
    }
  }
  return make_result<T>(Shape{n, j, d}, std::move(out), "weighted_capsule_sum", {couplings, u_hat},
                        [n, p, j, d](Node<T>& self) {
                          auto& cn = *self.inputs[0];
                          auto& un = *self.inputs[1];
                          auto* gc = cn.requires_grad ? cn.grad_buffer().data() : nullptr;
                          auto* gu = un.requires_grad ? un.grad_buffer().data() : nullptr;
                          for (std::size_t b = 0; b < n; ++b) {
                            for (std::size_t i = 0; i < p; ++i) {
                              for (std::size_t k = 0; k < j; ++k) {
                                const std::size_t ci = (b * p + i) * j + k;
                                const T* gs = self.grad.data() + (b * j + k) * d;
                                const T* src = un.value.data() + ci * d;
                                if (gc) {
                                  T dot = 0;
                                  for (std::size_t e = 0; e < d; ++e) dot += gs[e] * src[e];
                                  gc[ci] += dot;
                                }
                                if (gu) {
                                  const T cw = cn.value[ci];
                                  for (std::size_t e = 0; e < d; ++e) gu[ci * d + e] += cw * gs[e];
                                }
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> capsule_agreement(const Tensor<T>& u_hat, const Tensor<T>& v) {
  if (u_hat.rank() != 4 || v.rank() != 3 || v.dim(0) != u_hat.dim(0) || v.dim(1) != u_hat.dim(2) ||
      v.dim(2) != u_hat.dim(3)) {
    throw ShapeError("capsule_agreement: u_hat " + to_string(u_hat.shape()) + " vs v " +
                     to_string(v.shape()));
  }
  const std::size_t n = u_hat.dim(0), p = u_hat.dim(1), j = u_hat.dim(2), d = u_hat.dim(3);
  std::vector<T> out(n * p * j);
  const auto uh = u_hat.data();
  const auto vv = v.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t k = 0; k < j; ++k) {
        const T* a = uh.data() + ((b * p + i) * j + k) * d;
        const T* c = vv.data() + (b * j + k) * d;
        T dot = 0;
        for (std::size_t e = 0; e < d; ++e) dot += a[e] * c[e];
        out[(b * p + i) * j + k] = dot;
      }
    }
  }
  return make_result<T>(Shape{n, p, j}, std::move(out), "capsule_agreement", {u_hat, v},
                        [n, p, j, d](Node<T>& self) {
                          auto& un = *self.inputs[0];
                          auto& vn = *self.inputs[1];
                          auto* gu = un.requires_grad ? un.grad_buffer().data() : nullptr;
                          auto* gv = vn.requires_grad ? vn.grad_buffer().data() : nullptr;
                          for (std::size_t b = 0; b < n; ++b) {
                            for (std::size_t i = 0; i < p; ++i) {
                              for (std::size_t k = 0; k < j; ++k) {
                                const std::size_t ai = (b * p + i) * j + k;
                                const T ga = self.grad[ai];
                                if (gu) {
                                  const T* c = vn.value.data() + (b * j + k) * d;
                                  for (std::size_t e = 0; e < d; ++e) gu[ai * d + e] += ga * c[e];
                                }
                                if (gv) {
                                  const T* a = un.value.data() + ai * d;
                                  T* dst = gv + (b * j + k) * d;
                                  for (std::size_t e = 0; e < d; ++e) dst[e] += ga * a[e];
                                }
                              }
                            }
                          }
                        });
}

template <typename T>
RoutingResult<T> dynamic_routing(const Tensor<T>& u_hat_in, int iterations, RoutingGradient mode) {
  if (iterations < 1) throw std::invalid_argument("dynamic_routing: iterations must be >= 1");
  const bool unbatched = u_hat_in.rank() == 3;
  Tensor<T> u_hat = u_hat_in;
  if (unbatched) {
    u_hat = ops::reshape(u_hat_in, Shape{1, u_hat_in.dim(0), u_hat_in.dim(1), u_hat_in.dim(2)});
  }
  if (u_hat.rank() != 4) throw ShapeError("dynamic_routing: u_hat must be [N, P, J, D]");
  const std::size_t n = u_hat.dim(0), p = u_hat.dim(1), j = u_hat.dim(2);

  RoutingResult<T> result;
  auto run = [&](const Tensor<T>& source, bool keep_final) {
    Tensor<T> logits = Tensor<T>::zeros(Shape{n, p, j});
    Tensor<T> v;
    for (int it = 0; it < iterations; ++it) {
      Tensor<T> c = ops::softmax(logits, 2);
      result.couplings.push_back(c.to_vector());
      const bool last = it + 1 == iterations;
      if (last && !keep_final) {
        v = squash(weighted_capsule_sum(c.detach(), u_hat), 2);
        break;
      }
      v = squash(weighted_capsule_sum(c, source), 2);
      if (!last) logits = ops::add(logits, capsule_agreement(source, v));
    }
    return v;
  };

  if (mode == RoutingGradient::full) {
    result.v = run(u_hat, true);
  } else {
    result.v = run(u_hat.detach(), false);
  }
  if (unbatched) result.v = ops::reshape(result.v, Shape{result.v.dim(1), result.v.dim(2)});
  return result;
}

template <typename T>
Tensor<T> margin_loss(const Tensor<T>& norms, const std::vector<T>& targets, T m_plus, T m_minus,
                      T lambda) {
  if (targets.size() != norms.size()) throw ShapeError("margin_loss: targets do not match norms");
  const std::size_t classes = norms.shape().back();
  const std::size_t rows = norms.size() / classes;
  for (std::size_t r = 0; r < rows; ++r) {
    int ones = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      const T t = targets[r * classes + k];
      if (t == T(1)) {
        ++ones;
      } else if (t != T(0)) {
        ones = -1;
        break;
      }
    }
    if (ones != 1) throw std::invalid_argument("margin_loss: label is not one-hot");
  }
  const auto x = norms.data();
  T total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T pos = std::max(T(0), m_plus - x[i]);
    const T neg = std::max(T(0), x[i] - m_minus);
    total += targets[i] * pos * pos + lambda * (T(1) - targets[i]) * neg * neg;
  }
  const T inv_rows = T(1) / static_cast<T>(rows);
  return make_result<T>(Shape{1}, {total * inv_rows}, "margin_loss", {norms},
                        [targets, m_plus, m_minus, lambda, inv_rows](Node<T>& self) {
                          auto& in = *self.inputs[0];
                          auto g = in.grad_buffer();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            const T pos = std::max(T(0), m_plus - in.value[i]);
                            const T neg = std::max(T(0), in.value[i] - m_minus);
                            const T d = -T(2) * targets[i] * pos +
                                        T(2) * lambda * (T(1) - targets[i]) * neg;
                            g[i] += self.grad[0] * inv_rows * d;
                          }
                        });
}

template <typename T>
Tensor<T> reconstruction_loss(const Tensor<T>& recon, const Tensor<T>& target, T scale) {
  if (recon.shape() != target.shape()) {
    throw ShapeError("reconstruction_loss: " + to_string(recon.shape()) + " vs " +
                     to_string(target.shape()));
  }
  const T batch = recon.rank() == 4 ? static_cast<T>(recon.dim(0)) : T(1);
  return ops::scale(ops::sum_squared_error(recon, target), scale / batch);
}

template <typename T>
CapsNet<T>::CapsNet(CapsNetConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng = make_rng(seed, 0xC4B5);
  const auto& c = config_;
  conv1_kernels_ = he_parameter<T>({c.conv1.size, c.conv1.size, 1, c.conv1.kernels},
                                   c.conv1.size * c.conv1.size, rng);
  conv1_bias_ = zero_parameter<T>({c.conv1.kernels});
  const std::size_t prim_out = c.primary.channels * c.primary.caps_dim;
  primary_kernels_ =
      he_parameter<T>({c.primary.size, c.primary.size, c.conv1.kernels, prim_out},
                      c.primary.size * c.primary.size * c.conv1.kernels, rng);
  primary_bias_ = zero_parameter<T>({prim_out});
  const Shape w_shape{c.num_primary(), c.class_caps.count, c.primary.caps_dim, c.class_caps.dim};
  routing_weights_ = Tensor<T>(w_shape, truncated_normal<T>(numel(w_shape), c.routing_init_std, rng), true);

  std::size_t fan_in = c.class_caps.count * c.class_caps.dim;
  std::vector<std::size_t> widths = c.decoder_hidden;
  widths.push_back(c.input_size * c.input_size);
  for (std::size_t width : widths) {
    decoder_weights_.push_back(he_parameter<T>({fan_in, width}, fan_in, rng));
    decoder_biases_.push_back(zero_parameter<T>({width}));
    fan_in = width;
  }
}

template <typename T>
nlohmann::json CapsNet<T>::config_json() const {
  return config_;
}

template <typename T>
std::vector<NamedParameter<T>> CapsNet<T>::parameters() const {
  std::vector<NamedParameter<T>> out = {
      {"conv1.kernels", conv1_kernels_},
      {"conv1.bias", conv1_bias_},
      {"primary.kernels", primary_kernels_},
      {"primary.bias", primary_bias_},
      {"routing.weights", routing_weights_},
  };
  for (std::size_t i = 0; i < decoder_weights_.size(); ++i) {
    out.push_back({"decoder." + std::to_string(i) + ".weight", decoder_weights_[i]});
    out.push_back({"decoder." + std::to_string(i) + ".bias", decoder_biases_[i]});
  }
  return out;
}

template <typename T>
Tensor<T> CapsNet<T>::conv_features(const Tensor<T>& images) const {
  return ops::relu(ops::add_bias(ops::conv2d(images, conv1_kernels_, config_.conv1.stride), conv1_bias_));
}

template <typename T>
Tensor<T> CapsNet<T>::primary_capsules(const Tensor<T>& features) const {
  const auto& c = config_;
  const std::size_t grid = c.conv1_grid();
  if (features.rank() != 4 || features.dim(1) != grid || features.dim(2) != grid ||
      features.dim(3) != c.conv1.kernels) {
    throw ShapeError("primary_capsules: features " + to_string(features.shape()) +
                     " do not match the configured conv1 output");
  }
  auto conv = ops::add_bias(ops::conv2d(features, primary_kernels_, c.primary.stride), primary_bias_);
  auto poses = ops::reshape(conv, Shape{features.dim(0), c.num_primary(), c.primary.caps_dim});
  return squash(poses, 2);
}

template <typename T>
Tensor<T> CapsNet<T>::decode(const Tensor<T>& v, const std::vector<int>& mask_labels) const {
  const std::size_t n = v.dim(0), j = v.dim(1), d = v.dim(2);
  if (mask_labels.size() != n) throw ShapeError("decode: one mask label per sample required");
  std::vector<T> mask(n * j * d, T(0));
  const auto onehot = ops::one_hot<T>(mask_labels, j);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t k = 0; k < j; ++k) {
      std::fill_n(mask.begin() + (b * j + k) * d, d, onehot[b * j + k]);
    }
  }
  Tensor<T> h = ops::reshape(ops::mul_constant(v, mask), Shape{n, j * d});
  for (std::size_t i = 0; i < decoder_weights_.size(); ++i) {
    h = ops::linear(h, decoder_weights_[i], decoder_biases_[i]);
    h = i + 1 < decoder_weights_.size() ? ops::relu(h) : ops::sigmoid(h);
  }
  return ops::reshape(h, Shape{n, config_.input_size, config_.input_size, 1});
}

template <typename T>
CapsOutput<T> CapsNet<T>::forward(const Tensor<T>& images, const std::vector<int>* mask_labels) const {
  const auto& c = config_;
  if (images.rank() != 4 || images.dim(1) != c.input_size || images.dim(2) != c.input_size ||
      images.dim(3) != 1) {
    throw ShapeError("capsnet: expected [N, " + std::to_string(c.input_size) + ", " +
                     std::to_string(c.input_size) + ", 1] images, got " + to_string(images.shape()));
  }
  auto u = primary_capsules(conv_features(images));
  auto u_hat = capsule_predictions(u, routing_weights_);
  auto routed = dynamic_routing(u_hat, c.routing_iterations, c.routing_gradient);

  CapsOutput<T> out;
  out.v = routed.v;
  out.couplings = std::move(routed.couplings);
  out.norms = capsule_norm(out.v);
  const std::size_t n = images.dim(0), j = c.class_caps.count;
  out.predictions.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    const auto row = out.norms.data().subspan(b * j, j);
    out.predictions[b] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  out.recon = decode(out.v, mask_labels ? *mask_labels : out.predictions);
  return out;
}

template <typename T>
Tensor<T> CapsNet<T>::total_loss(const CapsOutput<T>& out, const Tensor<T>& images,
                                 const std::vector<int>& labels) const {
  const auto& c = config_;
  auto margin = margin_loss(out.norms, ops::one_hot<T>(labels, c.class_caps.count), T(c.m_plus),
                            T(c.m_minus), T(c.lambda));
  auto recon = reconstruction_loss(out.recon, images, T(c.recon_scale));
  return ops::add(margin, recon);
}

template <typename T>
BatchResult<T> CapsNet<T>::run_batch(const Tensor<T>& images, const std::vector<int>& labels) {
  auto out = forward(images, &labels);
  return {total_loss(out, images, labels), out.predictions};
}

template <typename T>
std::vector<int> CapsNet<T>::predict(const Tensor<T>& images) {
  NoGradGuard no_grad;
  return forward(images).predictions;
}

#define SARCAPS_INSTANTIATE(T)                                                                  \
  template Tensor<T> squash(const Tensor<T>&, std::size_t);                                     \
  template Tensor<T> capsule_norm(const Tensor<T>&);                                            \
  template Tensor<T> capsule_predictions(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> weighted_capsule_sum(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> capsule_agreement(const Tensor<T>&, const Tensor<T>&);                     \
  template RoutingResult<T> dynamic_routing(const Tensor<T>&, int, RoutingGradient);            \
  template Tensor<T> margin_loss(const Tensor<T>&, const std::vector<T>&, T, T, T);             \
  template Tensor<T> reconstruction_loss(const Tensor<T>&, const Tensor<T>&, T);                \
  template class CapsNet<T>;
SARCAPS_INSTANTIATE(float)
SARCAPS_INSTANTIATE(double)
#undef SARCAPS_INSTANTIATE

}  // namespace sarcaps::caps
