// Parallel vs reference kernels on shapes taken from the desk models.

#include <benchmark/benchmark.h>

#include <vector>

#include "sarcaps/kernels.hpp"
#include "sarcaps/random.hpp"

using namespace sarcaps;
using kernels::Backend;

namespace {

std::vector<float> filled(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return uniform<float>(n, -1, 1, rng);
}

void set_macs(benchmark::State& state, double macs) {
  state.counters["GMAC"] = benchmark::Counter(macs, benchmark::Counter::kIsIterationInvariantRate,
                                                 benchmark::Counter::kIs1000);
}

template <Backend B>
void BM_Gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0)), n = static_cast<std::size_t>(state.range(1)),
             k = static_cast<std::size_t>(state.range(2));
  const auto a = filled(m * k, 1), b = filled(k * n, 2);
  std::vector<float> c(m * n);
  for (auto _ : state) {
    if constexpr (B == Backend::parallel) {
      kernels::parallel::gemm(m, n, k, a.data(), b.data(), c.data(), false);
    } else {
      kernels::reference::gemm(m, n, k, a.data(), b.data(), c.data(), false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  set_macs(state, static_cast<double>(m) * n * k / 1e9);
}

// conv1 of the desk CapsNet (64x64, 9x9 s2, 256 kernels) and the primary
// capsule conv on its output, batch 4.
const std::vector<std::vector<int64_t>> kConvShapes = {{64, 1, 256, 2}, {28, 256, 256, 2}};

template <Backend B>
void BM_ConvForward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0)), cin = static_cast<std::size_t>(state.range(1)),
             cout = static_cast<std::size_t>(state.range(2)), stride = static_cast<std::size_t>(state.range(3));
  const auto g = kernels::ConvGeometry::make(4, side, side, cin, 9, cout, stride);
  const auto x = filled(g.input_size(), 3), w = filled(g.kernel_size(), 4);
  std::vector<float> y(g.output_size());
  for (auto _ : state) {
    if constexpr (B == Backend::parallel) {
      kernels::parallel::conv2d_forward(g, x.data(), w.data(), y.data());
    } else {
      kernels::reference::conv2d_forward(g, x.data(), w.data(), y.data());
    }
    benchmark::DoNotOptimize(y.data());
  }
  set_macs(state, static_cast<double>(g.output_size()) * g.patch_size() / 1e9);
}

template <Backend B>
void BM_ConvBackwardKernels(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0)), cin = static_cast<std::size_t>(state.range(1)),
             cout = static_cast<std::size_t>(state.range(2)), stride = static_cast<std::size_t>(state.range(3));
  const auto g = kernels::ConvGeometry::make(4, side, side, cin, 9, cout, stride);
  const auto x = filled(g.input_size(), 5), gy = filled(g.output_size(), 6);
  std::vector<float> gw(g.kernel_size());
  for (auto _ : state) {
    if constexpr (B == Backend::parallel) {
      kernels::parallel::conv2d_backward_kernels(g, x.data(), gy.data(), gw.data());
    } else {
      kernels::reference::conv2d_backward_kernels(g, x.data(), gy.data(), gw.data());
    }
    benchmark::DoNotOptimize(gw.data());
  }
  set_macs(state, static_cast<double>(g.output_size()) * g.patch_size() / 1e9);
}

template <Backend B>
void BM_CapsulePredict(benchmark::State& state) {
  kernels::CapsuleGeometry g{4, static_cast<std::size_t>(state.range(0)), 3, 8, 16};
  const auto u = filled(g.batch * g.primary * g.in_dim, 7);
  const auto w = filled(g.primary * g.classes * g.in_dim * g.out_dim, 8);
  std::vector<float> u_hat(g.batch * g.primary * g.classes * g.out_dim);
  for (auto _ : state) {
    if constexpr (B == Backend::parallel) {
      kernels::parallel::capsule_predict_forward(g, u.data(), w.data(), u_hat.data());
    } else {
      kernels::reference::capsule_predict_forward(g, u.data(), w.data(), u_hat.data());
    }
    benchmark::DoNotOptimize(u_hat.data());
  }
  set_macs(state, static_cast<double>(u_hat.size()) * g.in_dim / 1e9);
}

void gemm_args(benchmark::internal::Benchmark* b) {
  b->Args({256, 256, 256})->Args({1024, 256, 81})->Args({400, 256, 20736});
}

void conv_args(benchmark::internal::Benchmark* b) {
  for (const auto& s : kConvShapes) b->Args(s);
}

}  // namespace

BENCHMARK(BM_Gemm<Backend::parallel>)->Apply(gemm_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gemm<Backend::reference>)->Apply(gemm_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<Backend::parallel>)->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<Backend::reference>)->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardKernels<Backend::parallel>)->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardKernels<Backend::reference>)->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CapsulePredict<Backend::parallel>)->Arg(3200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CapsulePredict<Backend::reference>)->Arg(3200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
