#pragma once

// Differentiable tensor operations. No implicit broadcasting: binary ops
// require equal shapes, and the few broadcast patterns the models need
// (bias add, scalar scale) are explicit ops.
//
// Spatial tensors are NHWC. Convolution-family ops also accept an unbatched
// HxWxC tensor and return an unbatched result.

#include <cstddef>
#include <vector>

#include "sarcaps/tensor.hpp"

namespace sarcaps::ops {

enum class ElementwiseKind { add, sub, mul, scale, relu, sigmoid, tanh };

/// Generic entry point; `b` is required for add/sub/mul and ignored
/// otherwise, `factor` is used by scale only.
template <typename T>
Tensor<T> elementwise(ElementwiseKind kind, const Tensor<T>& a, const Tensor<T>* b = nullptr,
                      T factor = T(1));

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> leaky_relu(const Tensor<T>& a, T slope);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);
template <typename T> Tensor<T> tanh(const Tensor<T>& a);

/// Sum of all entries, shape [1].
template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);

/// Same values, new shape with equal element count.
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);

/// [m x k] * [k x n].
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// x[..., F] + bias[F] along the last axis.
template <typename T> Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);

/// Dense layer: x[N x in] * w[in x out] + b[out].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

/// Valid convolution, kernels [k, k, in_c, out_c].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, std::size_t stride);

/// Adjoint of conv2d with the same kernel array: kernels [k, k, out_c, in_c]
/// from this op's point of view. Output side is (H - 1) * stride + k.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& kernels, std::size_t stride);

/// Constant zero padding of `pad` pixels on every spatial border.
template <typename T> Tensor<T> pad2d(const Tensor<T>& input, std::size_t pad);

/// Spatial window [top, top + height) x [left, left + width).
template <typename T>
Tensor<T> crop2d(const Tensor<T>& input, std::size_t top, std::size_t left, std::size_t height,
                 std::size_t width);

/// Center crop to height x width (offsets floor((H - h) / 2)).
template <typename T>
Tensor<T> center_crop2d(const Tensor<T>& input, std::size_t height, std::size_t width);

/// Max-subtracted softmax along `axis`.
template <typename T> Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);

/// Per-sample, per-channel mean/variance normalization over the spatial axes
/// of an NHWC tensor. No learned affine and no cross-batch statistics.
template <typename T> Tensor<T> instance_norm(const Tensor<T>& x, T eps = T(1e-5));

/// Mean over samples of -sum_k label_k * ln(p_k + 1e-12). probs/labels [N x C]
/// (or [C]); each probs row must sum to 1 within 1e-5 and labels must be one-hot.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& probs, const std::vector<int>& labels);

/// Mean binary cross-entropy of sigmoid(logits) against a constant target,
/// evaluated in the overflow-free log-sum-exp form.
template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, T target);

/// sum((a - target)^2) with `target` treated as a constant.
template <typename T>
Tensor<T> sum_squared_error(const Tensor<T>& a, const Tensor<T>& target);

/// Multiplies by a constant (gradient-free) tensor of the same shape.
template <typename T>
Tensor<T> mul_constant(const Tensor<T>& a, const std::vector<T>& constant);

/// One-hot matrix [labels.size() x classes].
template <typename T>
std::vector<T> one_hot(const std::vector<int>& labels, std::size_t classes);

}  // namespace sarcaps::ops
