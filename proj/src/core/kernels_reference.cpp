// Direct-loop serial kernels. Kept deliberately naive: they are the oracle
// the blocked/OpenMP kernels are tested against.

#include "sarcaps/kernels.hpp"

namespace sarcaps::kernels::reference {

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T sum = accumulate ? c[i * n + j] : T(0);
      for (std::size_t p = 0; p < k; ++p) sum += a[i * k + p] * b[p * n + j];
      c[i * n + j] = sum;
    }
  }
}

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* kernels, T* output) {
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        for (std::size_t co = 0; co < g.out_c; ++co) {
          T sum = 0;
          for (std::size_t ky = 0; ky < g.kernel; ++ky) {
            for (std::size_t kx = 0; kx < g.kernel; ++kx) {
              const std::size_t iy = oy * g.stride + ky;
              const std::size_t ix = ox * g.stride + kx;
              for (std::size_t ci = 0; ci < g.in_c; ++ci) {
                sum += input[((b * g.in_h + iy) * g.in_w + ix) * g.in_c + ci] *
                       kernels[((ky * g.kernel + kx) * g.in_c + ci) * g.out_c + co];
              }
            }
          }
          output[((b * g.out_h + oy) * g.out_w + ox) * g.out_c + co] = sum;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* kernels, const T* grad_output,
                           T* grad_input) {
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        for (std::size_t co = 0; co < g.out_c; ++co) {
          const T go = grad_output[((b * g.out_h + oy) * g.out_w + ox) * g.out_c + co];
          for (std::size_t ky = 0; ky < g.kernel; ++ky) {
            for (std::size_t kx = 0; kx < g.kernel; ++kx) {
              const std::size_t iy = oy * g.stride + ky;
              const std::size_t ix = ox * g.stride + kx;
              for (std::size_t ci = 0; ci < g.in_c; ++ci) {
                grad_input[((b * g.in_h + iy) * g.in_w + ix) * g.in_c + ci] +=
                    go * kernels[((ky * g.kernel + kx) * g.in_c + ci) * g.out_c + co];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_kernels(const ConvGeometry& g, const T* input, const T* grad_output,
                             T* grad_kernels) {
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        for (std::size_t co = 0; co < g.out_c; ++co) {
          const T go = grad_output[((b * g.out_h + oy) * g.out_w + ox) * g.out_c + co];
          for (std::size_t ky = 0; ky < g.kernel; ++ky) {
            for (std::size_t kx = 0; kx < g.kernel; ++kx) {
              const std::size_t iy = oy * g.stride + ky;
              const std::size_t ix = ox * g.stride + kx;
              for (std::size_t ci = 0; ci < g.in_c; ++ci) {
                grad_kernels[((ky * g.kernel + kx) * g.in_c + ci) * g.out_c + co] +=
                    go * input[((b * g.in_h + iy) * g.in_w + ix) * g.in_c + ci];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void capsule_predict_forward(const CapsuleGeometry& g, const T* u, const T* weights, T* u_hat) {
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t p = 0; p < g.primary; ++p) {
      for (std::size_t j = 0; j < g.classes; ++j) {
        for (std::size_t d = 0; d < g.out_dim; ++d) {
          T sum = 0;
          for (std::size_t a = 0; a < g.in_dim; ++a) {
            sum += u[(b * g.primary + p) * g.in_dim + a] *
                   weights[((p * g.classes + j) * g.in_dim + a) * g.out_dim + d];
          }
          u_hat[((b * g.primary + p) * g.classes + j) * g.out_dim + d] = sum;
        }
      }
    }
  }
}

template <typename T>
void capsule_predict_backward(const CapsuleGeometry& g, const T* u, const T* weights,
                              const T* grad_u_hat, T* grad_u, T* grad_weights) {
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t p = 0; p < g.primary; ++p) {
      for (std::size_t j = 0; j < g.classes; ++j) {
        for (std::size_t d = 0; d < g.out_dim; ++d) {
          const T go = grad_u_hat[((b * g.primary + p) * g.classes + j) * g.out_dim + d];
          for (std::size_t a = 0; a < g.in_dim; ++a) {
            const std::size_t w = ((p * g.classes + j) * g.in_dim + a) * g.out_dim + d;
            if (grad_u) grad_u[(b * g.primary + p) * g.in_dim + a] += go * weights[w];
            if (grad_weights) grad_weights[w] += go * u[(b * g.primary + p) * g.in_dim + a];
          }
        }
      }
    }
  }
}

#define SARCAPS_INSTANTIATE(T)                                                              \
  template void gemm(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool);  \
  template void conv2d_forward(const ConvGeometry&, const T*, const T*, T*);                \
  template void conv2d_backward_input(const ConvGeometry&, const T*, const T*, T*);         \
  template void conv2d_backward_kernels(const ConvGeometry&, const T*, const T*, T*);       \
  template void capsule_predict_forward(const CapsuleGeometry&, const T*, const T*, T*);    \
  template void capsule_predict_backward(const CapsuleGeometry&, const T*, const T*,        \
                                         const T*, T*, T*);
SARCAPS_INSTANTIATE(float)
SARCAPS_INSTANTIATE(double)
#undef SARCAPS_INSTANTIATE

}  // namespace sarcaps::kernels::reference
