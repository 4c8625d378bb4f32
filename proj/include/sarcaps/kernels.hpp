#pragma once

// Raw numeric kernels behind the differentiable ops. Every kernel exists
// twice: an OpenMP/cache-blocked version used by default and a direct-loop
// serial version in `kernels::reference` that the tests and benchmarks
// compare against. Parallel loops never split a reduction across threads,
// so results do not depend on the thread count.

#include <cstddef>

namespace sarcaps::kernels {

enum class Backend { parallel, reference };

Backend active_backend();

/// Routes the dispatching entry points below to `backend` on this thread.
class BackendGuard {
 public:
  explicit BackendGuard(Backend backend);
  ~BackendGuard();
  BackendGuard(const BackendGuard&) = delete;
  BackendGuard& operator=(const BackendGuard&) = delete;

 private:
  Backend previous_;
};

/// NHWC "valid" convolution geometry. Kernels are laid out [k, k, in_c, out_c].
struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_h = 0, in_w = 0, in_c = 0;
  std::size_t kernel = 0, out_c = 0, stride = 1;
  std::size_t out_h = 0, out_w = 0;

  /// Validates and fills out_h/out_w. Throws ShapeError.
  static ConvGeometry make(std::size_t batch, std::size_t in_h, std::size_t in_w,
                           std::size_t in_c, std::size_t kernel, std::size_t out_c,
                           std::size_t stride);

  std::size_t input_size() const { return batch * in_h * in_w * in_c; }
  std::size_t output_size() const { return batch * out_h * out_w * out_c; }
  std::size_t kernel_size() const { return kernel * kernel * in_c * out_c; }
  std::size_t patch_size() const { return kernel * kernel * in_c; }
  std::size_t positions() const { return out_h * out_w; }
};

/// Capsule prediction geometry: u[batch, primary, in_dim] and
/// W[primary, classes, in_dim, out_dim] give u_hat[batch, primary, classes, out_dim].
struct CapsuleGeometry {
  std::size_t batch = 1, primary = 0, classes = 0, in_dim = 0, out_dim = 0;
};

// Dispatching entry points (honour BackendGuard).

/// c[m x n] (+)= a[m x k] * b[k x n], row-major.
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate);

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* kernels, T* output);

/// grad_input += d(output)/d(input)^T grad_output. Also the transposed-conv forward.
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* kernels, const T* grad_output,
                           T* grad_input);

/// grad_kernels += d(output)/d(kernels)^T grad_output.
template <typename T>
void conv2d_backward_kernels(const ConvGeometry& g, const T* input, const T* grad_output,
                             T* grad_kernels);

template <typename T>
void capsule_predict_forward(const CapsuleGeometry& g, const T* u, const T* weights, T* u_hat);

template <typename T>
void capsule_predict_backward(const CapsuleGeometry& g, const T* u, const T* weights,
                              const T* grad_u_hat, T* grad_u, T* grad_weights);

template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* src, T* dst);

namespace parallel {
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate);
template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* kernels, T* output);
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* kernels, const T* grad_output,
                           T* grad_input);
template <typename T>
void conv2d_backward_kernels(const ConvGeometry& g, const T* input, const T* grad_output,
                             T* grad_kernels);
template <typename T>
void capsule_predict_forward(const CapsuleGeometry& g, const T* u, const T* weights, T* u_hat);
template <typename T>
void capsule_predict_backward(const CapsuleGeometry& g, const T* u, const T* weights,
                              const T* grad_u_hat, T* grad_u, T* grad_weights);
}  // namespace parallel

namespace reference {
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate);
template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* kernels, T* output);
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* kernels, const T* grad_output,
                           T* grad_input);
template <typename T>
void conv2d_backward_kernels(const ConvGeometry& g, const T* input, const T* grad_output,
                             T* grad_kernels);
template <typename T>
void capsule_predict_forward(const CapsuleGeometry& g, const T* u, const T* weights, T* u_hat);
template <typename T>
void capsule_predict_backward(const CapsuleGeometry& g, const T* u, const T* weights,
                              const T* grad_u_hat, T* grad_u, T* grad_weights);
}  // namespace reference

}  // namespace sarcaps::kernels
