#include <algorithm>
#include <vector>

#include "sarcaps/error.hpp"
#include "sarcaps/kernels.hpp"

namespace sarcaps::kernels {

namespace {
thread_local Backend t_backend = Backend::parallel;

// Upper bound on im2col scratch, in elements.
constexpr std::size_t kColumnBudget = std::size_t{1} << 24;
}  // namespace

Backend active_backend() { return t_backend; }

BackendGuard::BackendGuard(Backend backend) : previous_(t_backend) { t_backend = backend; }
BackendGuard::~BackendGuard() { t_backend = previous_; }

ConvGeometry ConvGeometry::make(std::size_t batch, std::size_t in_h, std::size_t in_w,
                                std::size_t in_c, std::size_t kernel, std::size_t out_c,
                                std::size_t stride) {
  if (stride < 1) throw ShapeError("convolution stride must be >= 1");
  if (kernel < 1 || kernel > in_h || kernel > in_w) {
    throw ShapeError("convolution kernel " + std::to_string(kernel) + " larger than input " +
                     std::to_string(in_h) + "x" + std::to_string(in_w));
  }
  ConvGeometry g;
  g.batch = batch;
  g.in_h = in_h;
  g.in_w = in_w;
  g.in_c = in_c;
  g.kernel = kernel;
  g.out_c = out_c;
  g.stride = stride;
  g.out_h = (in_h - kernel) / stride + 1;
  g.out_w = (in_w - kernel) / stride + 1;
  return g;
}

template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* src, T* dst) {
  constexpr std::size_t kTile = 32;
#pragma omp parallel for schedule(static)
  for (std::size_t r0 = 0; r0 < rows; r0 += kTile) {
    const std::size_t r1 = std::min(rows, r0 + kTile);
    for (std::size_t c0 = 0; c0 < cols; c0 += kTile) {
      const std::size_t c1 = std::min(cols, c0 + kTile);
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = c0; c < c1; ++c) dst[c * rows + r] = src[r * cols + c];
      }
    }
  }
}

namespace parallel {

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T(0));
  constexpr std::size_t kBlockK = 256;
  constexpr std::size_t kBlockN = 512;
  const std::size_t quads = m / 4;
  for (std::size_t k0 = 0; k0 < k; k0 += kBlockK) {
    const std::size_t k1 = std::min(k, k0 + kBlockK);
    for (std::size_t j0 = 0; j0 < n; j0 += kBlockN) {
      const std::size_t j1 = std::min(n, j0 + kBlockN);
#pragma omp parallel for schedule(static)
      for (std::size_t q = 0; q < quads; ++q) {
        const std::size_t i = q * 4;
        T* c0 = c + i * n;
        T* c1 = c0 + n;
        T* c2 = c1 + n;
        T* c3 = c2 + n;
        for (std::size_t p = k0; p < k1; ++p) {
          const T* brow = b + p * n;
          const T a0 = a[i * k + p];
          const T a1 = a[(i + 1) * k + p];
          const T a2 = a[(i + 2) * k + p];
          const T a3 = a[(i + 3) * k + p];
#pragma omp simd
          for (std::size_t j = j0; j < j1; ++j) {
            const T bj = brow[j];
            c0[j] += a0 * bj;
            c1[j] += a1 * bj;
            c2[j] += a2 * bj;
            c3[j] += a3 * bj;
          }
        }
      }
      for (std::size_t i = quads * 4; i < m; ++i) {
        T* crow = c + i * n;
        for (std::size_t p = k0; p < k1; ++p) {
          const T* brow = b + p * n;
          const T ai = a[i * k + p];
#pragma omp simd
          for (std::size_t j = j0; j < j1; ++j) crow[j] += ai * brow[j];
        }
      }
    }
  }
}

namespace {

template <typename T>
void im2col(const ConvGeometry& g, const T* input, std::size_t samples, T* col) {
  const std::size_t positions = g.positions();
  const std::size_t row_len = g.patch_size();
  const std::size_t span = g.kernel * g.in_c;
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < samples * positions; ++r) {
    const std::size_t b = r / positions;
    const std::size_t oy = (r % positions) / g.out_w;
    const std::size_t ox = r % g.out_w;
    T* dst = col + r * row_len;
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      const T* src = input + ((b * g.in_h + oy * g.stride + ky) * g.in_w + ox * g.stride) * g.in_c;
      std::copy(src, src + span, dst + ky * span);
    }
  }
}

// Gather form of col2im: each input pixel sums its contributing patch
// entries in a fixed order, so the loop parallelizes without atomics.
template <typename T>
void col2im_add(const ConvGeometry& g, const T* col, std::size_t samples, T* grad_input) {
  const std::size_t row_len = g.patch_size();
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < samples * g.in_h; ++r) {
    const std::size_t b = r / g.in_h;
    const std::size_t iy = r % g.in_h;
    for (std::size_t ky = 0; ky < g.kernel && ky <= iy; ++ky) {
      if ((iy - ky) % g.stride != 0) continue;
      const std::size_t oy = (iy - ky) / g.stride;
      if (oy >= g.out_h) continue;
      for (std::size_t ix = 0; ix < g.in_w; ++ix) {
        T* dst = grad_input + ((b * g.in_h + iy) * g.in_w + ix) * g.in_c;
        for (std::size_t kx = 0; kx < g.kernel && kx <= ix; ++kx) {
          if ((ix - kx) % g.stride != 0) continue;
          const std::size_t ox = (ix - kx) / g.stride;
          if (ox >= g.out_w) continue;
          const T* src = col + ((b * g.out_h + oy) * g.out_w + ox) * row_len +
                         (ky * g.kernel + kx) * g.in_c;
          for (std::size_t c = 0; c < g.in_c; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

std::size_t samples_per_chunk(const ConvGeometry& g) {
  const std::size_t per_sample = g.positions() * g.patch_size();
  return std::clamp<std::size_t>(kColumnBudget / std::max<std::size_t>(per_sample, 1), 1,
                                 g.batch);
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* kernels, T* output) {
  const std::size_t chunk = samples_per_chunk(g);
  std::vector<T> col(chunk * g.positions() * g.patch_size());
  for (std::size_t b0 = 0; b0 < g.batch; b0 += chunk) {
    const std::size_t nb = std::min(chunk, g.batch - b0);
    const T* in = input + b0 * g.in_h * g.in_w * g.in_c;
    im2col(g, in, nb, col.data());
    gemm(nb * g.positions(), g.out_c, g.patch_size(), col.data(), kernels,
         output + b0 * g.positions() * g.out_c, false);
  }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* kernels, const T* grad_output,
                           T* grad_input) {
  std::vector<T> kernels_t(g.kernel_size());
  transpose(g.patch_size(), g.out_c, kernels, kernels_t.data());
  const std::size_t chunk = samples_per_chunk(g);
  std::vector<T> col(chunk * g.positions() * g.patch_size());
  for (std::size_t b0 = 0; b0 < g.batch; b0 += chunk) {
    const std::size_t nb = std::min(chunk, g.batch - b0);
    gemm(nb * g.positions(), g.patch_size(), g.out_c, grad_output + b0 * g.positions() * g.out_c,
         kernels_t.data(), col.data(), false);
    col2im_add(g, col.data(), nb, grad_input + b0 * g.in_h * g.in_w * g.in_c);
  }
}

template <typename T>
void conv2d_backward_kernels(const ConvGeometry& g, const T* input, const T* grad_output,
                             T* grad_kernels) {
  const std::size_t chunk = samples_per_chunk(g);
  std::vector<T> col(chunk * g.positions() * g.patch_size());
  std::vector<T> grad_t(chunk * g.positions() * g.out_c);
  std::vector<T> acc_t(g.kernel_size(), T(0));  // [out_c, patch]
  for (std::size_t b0 = 0; b0 < g.batch; b0 += chunk) {
    const std::size_t nb = std::min(chunk, g.batch - b0);
    const std::size_t rows = nb * g.positions();
    im2col(g, input + b0 * g.in_h * g.in_w * g.in_c, nb, col.data());
    transpose(rows, g.out_c, grad_output + b0 * g.positions() * g.out_c, grad_t.data());
    gemm(g.out_c, g.patch_size(), rows, grad_t.data(), col.data(), acc_t.data(), true);
  }
  const std::size_t patch = g.patch_size();
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < patch; ++p) {
    for (std::size_t co = 0; co < g.out_c; ++co) grad_kernels[p * g.out_c + co] += acc_t[co * patch + p];
  }
}

template <typename T>
void capsule_predict_forward(const CapsuleGeometry& g, const T* u, const T* weights, T* u_hat) {
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < g.primary; ++p) {
    for (std::size_t b = 0; b < g.batch; ++b) {
      const T* up = u + (b * g.primary + p) * g.in_dim;
      for (std::size_t j = 0; j < g.classes; ++j) {
        T* out = u_hat + ((b * g.primary + p) * g.classes + j) * g.out_dim;
        const T* w = weights + (p * g.classes + j) * g.in_dim * g.out_dim;
        std::fill(out, out + g.out_dim, T(0));
        for (std::size_t a = 0; a < g.in_dim; ++a) {
          const T ua = up[a];
          const T* wrow = w + a * g.out_dim;
#pragma omp simd
          for (std::size_t d = 0; d < g.out_dim; ++d) out[d] += ua * wrow[d];
        }
      }
    }
  }
}

template <typename T>
void capsule_predict_backward(const CapsuleGeometry& g, const T* u, const T* weights,
                              const T* grad_u_hat, T* grad_u, T* grad_weights) {
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < g.primary; ++p) {
    for (std::size_t b = 0; b < g.batch; ++b) {
      const T* up = u + (b * g.primary + p) * g.in_dim;
      for (std::size_t j = 0; j < g.classes; ++j) {
        const T* go = grad_u_hat + ((b * g.primary + p) * g.classes + j) * g.out_dim;
        const T* w = weights + (p * g.classes + j) * g.in_dim * g.out_dim;
        T* gw = grad_weights ? grad_weights + (p * g.classes + j) * g.in_dim * g.out_dim : nullptr;
        for (std::size_t a = 0; a < g.in_dim; ++a) {
          const T* wrow = w + a * g.out_dim;
          if (grad_u) {
            T sum = 0;
            for (std::size_t d = 0; d < g.out_dim; ++d) sum += go[d] * wrow[d];
            grad_u[(b * g.primary + p) * g.in_dim + a] += sum;
          }
          if (gw) {
            const T ua = up[a];
#pragma omp simd
            for (std::size_t d = 0; d < g.out_dim; ++d) gw[a * g.out_dim + d] += ua * go[d];
          }
        }
      }
    }
  }
}

}  // namespace parallel

#define SARCAPS_DISPATCH(name, params, args)                 \
  template <typename T>                                      \
  void name params {                                         \
    if (t_backend == Backend::reference) {                   \
      reference::name args;                                  \
    } else {                                                 \
      parallel::name args;                                   \
    }                                                        \
  }

SARCAPS_DISPATCH(gemm,
                 (std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
                  bool accumulate),
                 (m, n, k, a, b, c, accumulate))
SARCAPS_DISPATCH(conv2d_forward, (const ConvGeometry& g, const T* in, const T* k, T* out),
                 (g, in, k, out))
SARCAPS_DISPATCH(conv2d_backward_input,
                 (const ConvGeometry& g, const T* k, const T* go, T* gi), (g, k, go, gi))
SARCAPS_DISPATCH(conv2d_backward_kernels,
                 (const ConvGeometry& g, const T* in, const T* go, T* gk), (g, in, go, gk))
SARCAPS_DISPATCH(capsule_predict_forward,
                 (const CapsuleGeometry& g, const T* u, const T* w, T* uh), (g, u, w, uh))
SARCAPS_DISPATCH(capsule_predict_backward,
                 (const CapsuleGeometry& g, const T* u, const T* w, const T* guh, T* gu, T* gw),
                 (g, u, w, guh, gu, gw))
#undef SARCAPS_DISPATCH

#define SARCAPS_INSTANTIATE(ns, T)                                                              \
  template void ns gemm(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool);  \
  template void ns conv2d_forward(const ConvGeometry&, const T*, const T*, T*);                \
  template void ns conv2d_backward_input(const ConvGeometry&, const T*, const T*, T*);         \
  template void ns conv2d_backward_kernels(const ConvGeometry&, const T*, const T*, T*);       \
  template void ns capsule_predict_forward(const CapsuleGeometry&, const T*, const T*, T*);    \
  template void ns capsule_predict_backward(const CapsuleGeometry&, const T*, const T*,        \
                                            const T*, T*, T*);
SARCAPS_INSTANTIATE(, float)
SARCAPS_INSTANTIATE(, double)
SARCAPS_INSTANTIATE(parallel::, float)
SARCAPS_INSTANTIATE(parallel::, double)
#undef SARCAPS_INSTANTIATE

template void transpose(std::size_t, std::size_t, const float*, float*);
template void transpose(std::size_t, std::size_t, const double*, double*);

}  // namespace sarcaps::kernels
