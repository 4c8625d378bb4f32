#include "sarcaps/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sarcaps/kernels.hpp"

namespace sarcaps::ops {

namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

template <typename T>
bool wants_grad(const std::shared_ptr<Node<T>>& n) {
  return n->requires_grad;
}

// Unary elementwise op whose derivative is a function of (input, output).
template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(const Tensor<T>& a, std::string_view name, Fwd fwd, Deriv deriv) {
  std::vector<T> out(a.size());
  const auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i]);
  return make_result<T>(a.shape(), std::move(out), name, {a}, [deriv](Node<T>& self) {
    auto& in = *self.inputs[0];
    auto g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * deriv(in.value[i], self.value[i]);
    }
  });
}

struct Spatial {
  bool batched;
  std::size_t n, h, w, c;
};

template <typename T>
Spatial spatial_of(const Tensor<T>& x, const char* op) {
  if (x.rank() == 4) return {true, x.dim(0), x.dim(1), x.dim(2), x.dim(3)};
  if (x.rank() == 3) return {false, 1, x.dim(0), x.dim(1), x.dim(2)};
  throw ShapeError(std::string(op) + ": expected HxWxC or NxHxWxC, got " + to_string(x.shape()));
}

Shape spatial_shape(const Spatial& s, std::size_t h, std::size_t w, std::size_t c) {
  if (s.batched) return {s.n, h, w, c};
  return {h, w, c};
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make_result<T>(a.shape(), std::move(out), "add", {a, b}, [](Node<T>& self) {
    for (auto& in : self.inputs) {
      if (!wants_grad(in)) continue;
      auto g = in->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make_result<T>(a.shape(), std::move(out), "sub", {a, b}, [](Node<T>& self) {
    if (wants_grad(self.inputs[0])) {
      auto g = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants_grad(self.inputs[1])) {
      auto g = self.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make_result<T>(a.shape(), std::move(out), "mul", {a, b}, [](Node<T>& self) {
    auto& lhs = *self.inputs[0];
    auto& rhs = *self.inputs[1];
    if (lhs.requires_grad) {
      auto g = lhs.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * rhs.value[i];
    }
    if (rhs.requires_grad) {
      auto g = rhs.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * lhs.value[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  return unary<T>(
      a, "scale", [factor](T x) { return factor * x; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return unary<T>(
      a, "relu", [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
  return unary<T>(
      a, "leaky_relu", [slope](T x) { return x > T(0) ? x : slope * x; },
      [slope](T x, T) { return x > T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary<T>(
      a, "sigmoid",
      [](T x) {
        if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
        const T e = std::exp(x);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return unary<T>(
      a, "tanh", [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> elementwise(ElementwiseKind kind, const Tensor<T>& a, const Tensor<T>* b, T factor) {
  const auto need_b = [&]() -> const Tensor<T>& {
    if (b == nullptr || !b->defined()) throw ShapeError("binary elementwise op needs two operands");
    return *b;
  };
  switch (kind) {
    case ElementwiseKind::add: return add(a, need_b());
    case ElementwiseKind::sub: return sub(a, need_b());
    case ElementwiseKind::mul: return mul(a, need_b());
    case ElementwiseKind::scale: return scale(a, factor);
    case ElementwiseKind::relu: return relu(a);
    case ElementwiseKind::sigmoid: return sigmoid(a);
    case ElementwiseKind::tanh: return tanh(a);
  }
  throw std::invalid_argument("unknown elementwise kind");
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T total = 0;
  for (T x : a.data()) total += x;
  return make_result<T>(Shape{1}, {total}, "sum", {a}, [](Node<T>& self) {
    auto g = self.inputs[0]->grad_buffer();
    for (auto& gi : g) gi += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a.size()));
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ShapeError("reshape: " + to_string(a.shape()) + " -> " + to_string(shape));
  }
  return make_result<T>(std::move(shape), a.to_vector(), "reshape", {a}, [](Node<T>& self) {
    auto g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: " + to_string(a.shape()) + " * " + to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(m * n);
  kernels::gemm<T>(m, n, k, a.data().data(), b.data().data(), out.data(), false);
  return make_result<T>(Shape{m, n}, std::move(out), "matmul", {a, b}, [m, k, n](Node<T>& self) {
    auto& lhs = *self.inputs[0];
    auto& rhs = *self.inputs[1];
    if (lhs.requires_grad) {
      // dA = dC * B^T
      std::vector<T> bt(k * n);
      kernels::transpose<T>(k, n, rhs.value.data(), bt.data());
      kernels::gemm<T>(m, k, n, self.grad.data(), bt.data(), lhs.grad_buffer().data(), true);
    }
    if (rhs.requires_grad) {
      // dB = A^T * dC
      std::vector<T> at(m * k);
      kernels::transpose<T>(m, k, lhs.value.data(), at.data());
      kernels::gemm<T>(k, n, m, at.data(), self.grad.data(), rhs.grad_buffer().data(), true);
    }
  });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  const std::size_t f = bias.size();
  if (bias.rank() != 1 || x.shape().back() != f) {
    throw ShapeError("add_bias: " + to_string(x.shape()) + " + " + to_string(bias.shape()));
  }
  std::vector<T> out = x.to_vector();
  const auto bv = bias.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % f];
  return make_result<T>(x.shape(), std::move(out), "add_bias", {x, bias}, [f](Node<T>& self) {
    if (self.inputs[0]->requires_grad) {
      auto g = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (self.inputs[1]->requires_grad) {
      auto g = self.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % f] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  return add_bias(matmul(x, weight), bias);
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, std::size_t stride) {
  const Spatial s = spatial_of(input, "conv2d");
  if (kernels.rank() != 4 || kernels.dim(0) != kernels.dim(1) || kernels.dim(2) != s.c) {
    throw ShapeError("conv2d: kernels " + to_string(kernels.shape()) + " incompatible with input " +
                     to_string(input.shape()));
  }
  const auto g =
      kernels::ConvGeometry::make(s.n, s.h, s.w, s.c, kernels.dim(0), kernels.dim(3), stride);
  std::vector<T> out(g.output_size());
  kernels::conv2d_forward<T>(g, input.data().data(), kernels.data().data(), out.data());
  return make_result<T>(spatial_shape(s, g.out_h, g.out_w, g.out_c), std::move(out), "conv2d",
                        {input, kernels}, [g](Node<T>& self) {
                          auto& in = *self.inputs[0];
                          auto& k = *self.inputs[1];
                          if (in.requires_grad) {
                            kernels::conv2d_backward_input<T>(g, k.value.data(), self.grad.data(),
                                                              in.grad_buffer().data());
                          }
                          if (k.requires_grad) {
                            kernels::conv2d_backward_kernels<T>(
                                g, in.value.data(), self.grad.data(), k.grad_buffer().data());
                          }
                        });
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& kernels, std::size_t stride) {
  const Spatial s = spatial_of(input, "conv_transpose2d");
  if (stride < 1) throw ShapeError("conv_transpose2d: stride must be >= 1");
  if (kernels.rank() != 4 || kernels.dim(0) != kernels.dim(1) || kernels.dim(3) != s.c) {
    throw ShapeError("conv_transpose2d: kernels " + to_string(kernels.shape()) +
                     " incompatible with input " + to_string(input.shape()));
  }
  const std::size_t k = kernels.dim(0);
  const std::size_t out_h = (s.h - 1) * stride + k;
  const std::size_t out_w = (s.w - 1) * stride + k;
  // Geometry of the forward convolution this op is the adjoint of.
  const auto g = kernels::ConvGeometry::make(s.n, out_h, out_w, kernels.dim(2), k, s.c, stride);
  std::vector<T> out(g.input_size(), T(0));
  kernels::conv2d_backward_input<T>(g, kernels.data().data(), input.data().data(), out.data());
  return make_result<T>(spatial_shape(s, out_h, out_w, g.in_c), std::move(out),
                        "conv_transpose2d", {input, kernels}, [g](Node<T>& self) {
                          auto& in = *self.inputs[0];
                          auto& kern = *self.inputs[1];
                          if (in.requires_grad) {
                            std::vector<T> tmp(g.output_size());
                            kernels::conv2d_forward<T>(g, self.grad.data(), kern.value.data(),
                                                       tmp.data());
                            auto gi = in.grad_buffer();
                            for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += tmp[i];
                          }
                          if (kern.requires_grad) {
                            kernels::conv2d_backward_kernels<T>(
                                g, self.grad.data(), in.value.data(), kern.grad_buffer().data());
                          }
                        });
}

template <typename T>
Tensor<T> pad2d(const Tensor<T>& input, std::size_t pad) {
  const Spatial s = spatial_of(input, "pad2d");
  const std::size_t oh = s.h + 2 * pad, ow = s.w + 2 * pad;
  std::vector<T> out(s.n * oh * ow * s.c, T(0));
  const auto x = input.data();
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t y = 0; y < s.h; ++y) {
      const T* src = x.data() + ((b * s.h + y) * s.w) * s.c;
      std::copy(src, src + s.w * s.c, out.data() + ((b * oh + y + pad) * ow + pad) * s.c);
    }
  }
  return make_result<T>(spatial_shape(s, oh, ow, s.c), std::move(out), "pad2d", {input},
                        [s, pad, oh, ow](Node<T>& self) {
                          auto g = self.inputs[0]->grad_buffer();
                          for (std::size_t b = 0; b < s.n; ++b) {
                            for (std::size_t y = 0; y < s.h; ++y) {
                              const T* src =
                                  self.grad.data() + ((b * oh + y + pad) * ow + pad) * s.c;
                              T* dst = g.data() + ((b * s.h + y) * s.w) * s.c;
                              for (std::size_t i = 0; i < s.w * s.c; ++i) dst[i] += src[i];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> crop2d(const Tensor<T>& input, std::size_t top, std::size_t left, std::size_t height,
                 std::size_t width) {
  const Spatial s = spatial_of(input, "crop2d");
  if (height == 0 || width == 0 || top + height > s.h || left + width > s.w) {
    throw ShapeError("crop2d: window outside input " + to_string(input.shape()));
  }
  std::vector<T> out(s.n * height * width * s.c);
  const auto x = input.data();
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t y = 0; y < height; ++y) {
      const T* src = x.data() + ((b * s.h + y + top) * s.w + left) * s.c;
      std::copy(src, src + width * s.c, out.data() + ((b * height + y) * width) * s.c);
    }
  }
  return make_result<T>(spatial_shape(s, height, width, s.c), std::move(out), "crop2d", {input},
                        [s, top, left, height, width](Node<T>& self) {
                          auto g = self.inputs[0]->grad_buffer();
                          for (std::size_t b = 0; b < s.n; ++b) {
                            for (std::size_t y = 0; y < height; ++y) {
                              const T* src = self.grad.data() + ((b * height + y) * width) * s.c;
                              T* dst = g.data() + ((b * s.h + y + top) * s.w + left) * s.c;
                              for (std::size_t i = 0; i < width * s.c; ++i) dst[i] += src[i];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> center_crop2d(const Tensor<T>& input, std::size_t height, std::size_t width) {
  const Spatial s = spatial_of(input, "center_crop2d");
  if (height > s.h || width > s.w) throw ShapeError("center_crop2d: target larger than input");
  return crop2d(input, (s.h - height) / 2, (s.w - width) / 2, height, width);
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) throw ShapeError("softmax: axis out of range");
  const std::size_t len = x.dim(axis);
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.dim(d);
  const std::size_t outer = x.size() / (len * inner);
  std::vector<T> out(x.size());
  const auto v = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t l = 0; l < len; ++l) mx = std::max(mx, v[base + l * inner]);
      T total = 0;
      for (std::size_t l = 0; l < len; ++l) {
        out[base + l * inner] = std::exp(v[base + l * inner] - mx);
        total += out[base + l * inner];
      }
      for (std::size_t l = 0; l < len; ++l) out[base + l * inner] /= total;
    }
  }
  return make_result<T>(x.shape(), std::move(out), "softmax", {x},
                        [outer, inner, len](Node<T>& self) {
                          auto g = self.inputs[0]->grad_buffer();
                          const auto& y = self.value;
                          for (std::size_t o = 0; o < outer; ++o) {
                            for (std::size_t i = 0; i < inner; ++i) {
                              const std::size_t base = o * len * inner + i;
                              T dot = 0;
                              for (std::size_t l = 0; l < len; ++l) {
                                dot += self.grad[base + l * inner] * y[base + l * inner];
                              }
                              for (std::size_t l = 0; l < len; ++l) {
                                const std::size_t at = base + l * inner;
                                g[at] += y[at] * (self.grad[at] - dot);
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, T eps) {
  const Spatial s = spatial_of(x, "instance_norm");
  const std::size_t hw = s.h * s.w;
  std::vector<T> out(x.size());
  std::vector<T> inv_std(s.n * s.c);
  const auto v = x.data();
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      T mu = 0;
      for (std::size_t p = 0; p < hw; ++p) mu += v[(b * hw + p) * s.c + c];
      mu /= static_cast<T>(hw);
      T var = 0;
      for (std::size_t p = 0; p < hw; ++p) {
        const T d = v[(b * hw + p) * s.c + c] - mu;
        var += d * d;
      }
      var /= static_cast<T>(hw);
      const T is = T(1) / std::sqrt(var + eps);
      inv_std[b * s.c + c] = is;
      for (std::size_t p = 0; p < hw; ++p) {
        out[(b * hw + p) * s.c + c] = (v[(b * hw + p) * s.c + c] - mu) * is;
      }
    }
  }
  return make_result<T>(x.shape(), std::move(out), "instance_norm", {x},
                        [s, hw, inv_std = std::move(inv_std)](Node<T>& self) {
                          // dx = inv_std * (dy - mean(dy) - y * mean(dy * y))
                          auto g = self.inputs[0]->grad_buffer();
                          const auto& y = self.value;
                          const T count = static_cast<T>(hw);
                          for (std::size_t b = 0; b < s.n; ++b) {
                            for (std::size_t c = 0; c < s.c; ++c) {
                              T mean_dy = 0, mean_dyy = 0;
                              for (std::size_t p = 0; p < hw; ++p) {
                                const std::size_t at = (b * hw + p) * s.c + c;
                                mean_dy += self.grad[at];
                                mean_dyy += self.grad[at] * y[at];
                              }
                              mean_dy /= count;
                              mean_dyy /= count;
                              const T is = inv_std[b * s.c + c];
                              for (std::size_t p = 0; p < hw; ++p) {
                                const std::size_t at = (b * hw + p) * s.c + c;
                                g[at] += is * (self.grad[at] - mean_dy - y[at] * mean_dyy);
                              }
                            }
                          }
                        });
}

template <typename T>
std::vector<T> one_hot(const std::vector<int>& labels, std::size_t classes) {
  std::vector<T> out(labels.size() * classes, T(0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw std::invalid_argument("label " + std::to_string(labels[i]) + " outside [0, " +
                                  std::to_string(classes) + ")");
    }
    out[i * classes + static_cast<std::size_t>(labels[i])] = T(1);
  }
  return out;
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& probs, const std::vector<int>& labels) {
  const std::size_t classes = probs.shape().back();
  const std::size_t rows = probs.size() / classes;
  if (labels.size() != rows) throw ShapeError("cross_entropy: label count does not match rows");
  const auto p = probs.data();
  constexpr T kClamp = T(1e-12);
  T total = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    T row_sum = 0;
    for (std::size_t c = 0; c < classes; ++c) row_sum += p[r * classes + c];
    if (std::abs(row_sum - T(1)) > T(1e-5)) {
      throw std::invalid_argument("cross_entropy: probabilities do not sum to 1");
    }
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= classes) {
      throw std::invalid_argument("cross_entropy: label is not a valid one-hot index");
    }
    total -= std::log(p[r * classes + static_cast<std::size_t>(labels[r])] + kClamp);
  }
  const T inv_rows = T(1) / static_cast<T>(rows);
  return make_result<T>(Shape{1}, {total * inv_rows}, "cross_entropy", {probs},
                        [labels, classes, inv_rows](Node<T>& self) {
                          auto& in = *self.inputs[0];
                          auto g = in.grad_buffer();
                          for (std::size_t r = 0; r < labels.size(); ++r) {
                            const std::size_t at = r * classes + static_cast<std::size_t>(labels[r]);
                            g[at] -= self.grad[0] * inv_rows / (in.value[at] + kClamp);
                          }
                        });
}

template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, T target) {
  // loss(x) = max(x, 0) - x * t + log(1 + exp(-|x|))
  const auto x = logits.data();
  T total = 0;
  for (T xi : x) {
    total += std::max(xi, T(0)) - xi * target + std::log1p(std::exp(-std::abs(xi)));
  }
  const T inv_n = T(1) / static_cast<T>(x.size());
  return make_result<T>(Shape{1}, {total * inv_n}, "bce_with_logits", {logits},
                        [target, inv_n](Node<T>& self) {
                          auto& in = *self.inputs[0];
                          auto g = in.grad_buffer();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            const T xi = in.value[i];
                            const T sig = xi >= T(0) ? T(1) / (T(1) + std::exp(-xi))
                                                     : std::exp(xi) / (T(1) + std::exp(xi));
                            g[i] += self.grad[0] * inv_n * (sig - target);
                          }
                        });
}

template <typename T>
Tensor<T> sum_squared_error(const Tensor<T>& a, const Tensor<T>& target) {
  require_same_shape(a, target, "sum_squared_error");
  const auto x = a.data();
  const auto t = target.data();
  T total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) total += (x[i] - t[i]) * (x[i] - t[i]);
  return make_result<T>(Shape{1}, {total}, "sum_squared_error", {a},
                        [t = target.to_vector()](Node<T>& self) {
                          auto& in = *self.inputs[0];
                          auto g = in.grad_buffer();
                          const T scale = T(2) * self.grad[0];
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            g[i] += scale * (in.value[i] - t[i]);
                          }
                        });
}

template <typename T>
Tensor<T> mul_constant(const Tensor<T>& a, const std::vector<T>& constant) {
  if (constant.size() != a.size()) throw ShapeError("mul_constant: size mismatch");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * constant[i];
  return make_result<T>(a.shape(), std::move(out), "mul_constant", {a},
                        [constant](Node<T>& self) {
                          auto g = self.inputs[0]->grad_buffer();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * constant[i];
                        });
}

#define SARCAPS_INSTANTIATE(T)                                                                    \
  template Tensor<T> elementwise(ElementwiseKind, const Tensor<T>&, const Tensor<T>*, T);         \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> scale(const Tensor<T>&, T);                                                  \
  template Tensor<T> relu(const Tensor<T>&);                                                      \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                             \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                   \
  template Tensor<T> tanh(const Tensor<T>&);                                                      \
  template Tensor<T> sum(const Tensor<T>&);                                                       \
  template Tensor<T> mean(const Tensor<T>&);                                                      \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                            \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, std::size_t);                     \
  template Tensor<T> conv_transpose2d(const Tensor<T>&, const Tensor<T>&, std::size_t);           \
  template Tensor<T> pad2d(const Tensor<T>&, std::size_t);                                        \
  template Tensor<T> crop2d(const Tensor<T>&, std::size_t, std::size_t, std::size_t, std::size_t); \
  template Tensor<T> center_crop2d(const Tensor<T>&, std::size_t, std::size_t);                   \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                      \
  template Tensor<T> instance_norm(const Tensor<T>&, T);                                          \
  template Tensor<T> cross_entropy(const Tensor<T>&, const std::vector<int>&);                    \
  template Tensor<T> bce_with_logits(const Tensor<T>&, T);                                        \
  template Tensor<T> sum_squared_error(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> mul_constant(const Tensor<T>&, const std::vector<T>&);                       \
  template std::vector<T> one_hot(const std::vector<int>&, std::size_t);
SARCAPS_INSTANTIATE(float)
SARCAPS_INSTANTIATE(double)
#undef SARCAPS_INSTANTIATE

}  // namespace sarcaps::ops
