#include <gtest/gtest.h>

#include <cmath>

#include "sarcaps/capsnet.hpp"
#include "sarcaps/gradcheck.hpp"
#include "sarcaps/ops.hpp"
#include "sarcaps/random.hpp"

namespace sarcaps::caps {
namespace {

using D = Tensor<double>;

// Small architecture used for finite-difference checks.
CapsNetConfig tiny_config() {
  CapsNetConfig c;
  c.input_size = 12;
  c.conv1 = {4, 3, 1};
  c.primary = {2, 4, 3, 2};
  c.class_caps = {3, 4};
  c.decoder_hidden = {8, 6};
  c.routing_init_std = 0.5;
  return c;
}

// Plain-loop routing oracle over u_hat[p][j][d]; arithmetic order matches a
// straightforward reading of the algorithm.
std::vector<std::vector<double>> oracle_routing(const std::vector<double>& u_hat, std::size_t p,
                                                std::size_t j, std::size_t d, int iterations,
                                                std::vector<double>* final_c = nullptr) {
  std::vector<double> b(p * j, 0.0), c(p * j);
  std::vector<std::vector<double>> v(j, std::vector<double>(d));
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < p; ++i) {
      double mx = -1e300;
      for (std::size_t k = 0; k < j; ++k) mx = std::max(mx, b[i * j + k]);
      double total = 0;
      for (std::size_t k = 0; k < j; ++k) total += (c[i * j + k] = std::exp(b[i * j + k] - mx));
      for (std::size_t k = 0; k < j; ++k) c[i * j + k] /= total;
    }
    for (std::size_t k = 0; k < j; ++k) {
      std::vector<double> s(d, 0.0);
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t e = 0; e < d; ++e) s[e] += c[i * j + k] * u_hat[(i * j + k) * d + e];
      double sq = 0;
      for (double x : s) sq += x * x;
      const double factor = std::sqrt(sq) / (1.0 + sq);
      for (std::size_t e = 0; e < d; ++e) v[k][e] = s[e] * factor;
    }
    if (it + 1 < iterations) {
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t k = 0; k < j; ++k) {
          double dot = 0;
          for (std::size_t e = 0; e < d; ++e) dot += u_hat[(i * j + k) * d + e] * v[k][e];
          b[i * j + k] += dot;
        }
    }
  }
  if (final_c) *final_c = c;
  return v;
}

TEST(Squash, ClosedForms) {
  auto zero = squash(D({1, 2}, {0, 0}), 1);
  EXPECT_EQ(zero.to_vector(), (std::vector<double>{0, 0}));
  auto one = squash(D({2}, {1, 0}), 0);
  EXPECT_DOUBLE_EQ(one[0], 0.5);
  EXPECT_DOUBLE_EQ(one[1], 0.0);
  auto half = squash(D({2}, {0.5, 0}), 0);
  EXPECT_NEAR(half[0], 0.2, 1e-15);
}

TEST(Squash, NormBoundMonotoneAndDirection) {
  Rng rng = make_rng(2);
  std::lognormal_distribution<double> mag(0.0, 2.0);
  double prev_in = 0, prev_out = 0;
  std::vector<double> mags(200);
  for (auto& m : mags) m = mag(rng);
  std::sort(mags.begin(), mags.end());
  for (double m : mags) {
    auto dir = uniform<double>(5, -1, 1, rng);
    double n = 0;
    for (double x : dir) n += x * x;
    n = std::sqrt(n);
    for (auto& x : dir) x *= m / n;
    auto v = squash(D({5}, dir), 0);
    double vn = 0, cos = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      vn += v[i] * v[i];
      cos += v[i] * dir[i];
    }
    vn = std::sqrt(vn);
    EXPECT_LT(vn, 1.0);
    EXPECT_NEAR(cos / (vn * m), 1.0, 1e-12);
    if (m > prev_in) {
      EXPECT_GE(vn, prev_out);
    }
    prev_in = m;
    prev_out = vn;
  }
}

TEST(Squash, GradientIncludingNearZero) {
  Rng rng = make_rng(3);
  auto w = uniform<double>(12, -1, 1, rng);
  auto f = [&](const D& s) { return ops::sum(ops::mul_constant(squash(s, 1), w)); };
  EXPECT_LT(gradient_check(f, D({3, 4}, uniform<double>(12, -2, 2, rng))), 1e-6);
  EXPECT_LT(gradient_check(f, D({3, 4}, uniform<double>(12, -1e-3, 1e-3, rng))), 1e-4);
}

TEST(PrimaryCapsules, DeskGeometry) {
  auto config = CapsNetConfig::desk();
  EXPECT_EQ(config.conv1_grid(), 28u);
  EXPECT_EQ(config.primary_grid(), 10u);
  EXPECT_EQ(config.num_primary(), 3200u);
  CapsNet<float> net(config, 1);
  auto u = net.primary_capsules(Tensor<float>::zeros({1, 28, 28, 256}));
  EXPECT_EQ(u.shape(), (Shape{1, 3200, 8}));
  for (float x : u.data()) EXPECT_EQ(x, 0.0f);  // zero features, zero bias
  EXPECT_THROW(net.primary_capsules(Tensor<float>::zeros({1, 27, 27, 256})), ShapeError);
}

TEST(PrimaryCapsules, PaperGeometry) {
  auto config = CapsNetConfig::paper();
  EXPECT_EQ(config.conv1_grid(), 120u);
  EXPECT_EQ(config.primary_grid(), 56u);
  EXPECT_EQ(config.num_primary(), 100352u);
}

TEST(Routing, FirstIterationIsUniform) {
  Rng rng = make_rng(4);
  auto u_hat = D({2, 5, 3, 4}, uniform<double>(120, -1, 1, rng));
  auto r = dynamic_routing(u_hat, 1);
  ASSERT_EQ(r.couplings.size(), 1u);
  for (double c : r.couplings[0]) EXPECT_EQ(c, 1.0 / 3.0);
  EXPECT_THROW(dynamic_routing(u_hat, 0), std::invalid_argument);
}

TEST(Routing, SingleCapsuleClosedForm) {
  std::vector<double> uh(16, 0.0);
  uh[0] = 0.5;
  auto r = dynamic_routing(D({1, 1, 16}, uh), 3);
  ASSERT_EQ(r.v.shape(), (Shape{1, 16}));
  EXPECT_NEAR(r.v[0], 0.2, 1e-15);
  for (std::size_t i = 1; i < 16; ++i) EXPECT_EQ(r.v[i], 0.0);
}

TEST(Routing, CouplingsAreDistributions) {
  Rng rng = make_rng(5);
  auto u_hat = D({3, 7, 4, 5}, uniform<double>(3 * 7 * 4 * 5, -2, 2, rng));
  auto r = dynamic_routing(u_hat, 4);
  ASSERT_EQ(r.couplings.size(), 4u);
  for (const auto& c : r.couplings) {
    for (std::size_t row = 0; row < 21; ++row) {
      double total = 0;
      for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_GE(c[row * 4 + k], 0.0);
        total += c[row * 4 + k];
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(Routing, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = make_rng(seed, 6);
    const std::size_t p = 1 + seed % 8, j = 2 + seed % 3, d = 3;
    auto uh = uniform<double>(p * j * d, -1, 1, rng);
    for (int iters : {1, 2, 3}) {
      auto r = dynamic_routing(D({p, j, d}, uh), iters);
      auto v = oracle_routing(uh, p, j, d, iters);
      for (std::size_t k = 0; k < j; ++k)
        for (std::size_t e = 0; e < d; ++e) {
          if (iters == 1) {
            EXPECT_EQ(r.v[k * d + e], v[k][e]);
          } else {
            EXPECT_NEAR(r.v[k * d + e], v[k][e], 1e-14);
          }
        }
    }
  }
}

TEST(Routing, AgreementConcentratesCouplings) {
  // Class 0 predictions all point the same way; class 1 predictions are scattered.
  Rng rng = make_rng(7);
  const std::size_t p = 4, j = 2, d = 4;
  std::vector<double> uh(p * j * d);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t e = 0; e < d; ++e) {
      uh[(i * j + 0) * d + e] = 0.8 + 0.05 * uniform<double>(1, -1, 1, rng)[0];
      uh[(i * j + 1) * d + e] = uniform<double>(1, -0.5, 0.5, rng)[0];
    }
  }
  std::vector<double> oracle_c;
  oracle_routing(uh, p, j, d, 3, &oracle_c);
  auto r = dynamic_routing(D({p, j, d}, uh), 3);
  for (std::size_t i = 0; i < p; ++i) {
    EXPECT_GT(oracle_c[i * j], oracle_c[i * j + 1]);
    EXPECT_GT(r.couplings.back()[i * j], r.couplings.back()[i * j + 1]);
  }
}

TEST(Routing, GradientThroughAllIterations) {
  Rng rng = make_rng(8);
  auto w = uniform<double>(2 * 3 * 4, -1, 1, rng);
  for (int iters : {1, 2, 3}) {
    auto r = gradient_check(
        [&](const std::vector<D>& in) {
          return ops::sum(ops::mul_constant(dynamic_routing(in[0], iters).v, w));
        },
        {D({2, 5, 3, 4}, uniform<double>(120, -1, 1, rng))});
    EXPECT_LT(r.max_relative_error, 1e-4) << iters;
  }
}

TEST(Routing, FinalOnlyModeSharesForwardValues) {
  Rng rng = make_rng(9);
  auto u_hat = D({2, 6, 3, 4}, uniform<double>(144, -1, 1, rng));
  auto full = dynamic_routing(u_hat, 3, RoutingGradient::full);
  auto final_only = dynamic_routing(u_hat, 3, RoutingGradient::final_only);
  EXPECT_EQ(full.v.to_vector(), final_only.v.to_vector());
}

TEST(MarginLoss, ClosedForms) {
  // true class 0, others at 0.1: both hinges inactive
  EXPECT_NEAR(margin_loss(D({3}, {0.9, 0.1, 0.1}), {1, 0, 0}).item(), 0.0, 1e-7);
  EXPECT_NEAR(margin_loss(D({3}, {0.0, 0.1, 0.1}), {1, 0, 0}).item(), 0.81, 1e-7);
  EXPECT_NEAR(margin_loss(D({3}, {0.9, 1.0, 0.1}), {1, 0, 0}).item(), 0.405, 1e-7);
  EXPECT_THROW(margin_loss(D({3}, {0.9, 1.0, 0.1}), {1, 1, 0}), std::invalid_argument);
  EXPECT_THROW(margin_loss(D({3}, {0.9, 1.0, 0.1}), {0.5, 0.5, 0}), std::invalid_argument);
}

TEST(MarginLoss, Gradient) {
  auto r = gradient_check(
      [](const std::vector<D>& in) { return margin_loss(in[0], {0, 1, 0, 1, 0, 0}); },
      {D({2, 3}, {0.3, 0.45, 0.72, 0.61, 0.05, 0.97})});
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(ReconstructionLoss, ClosedForms) {
  auto t = D::full({2, 2}, 0.3);
  EXPECT_EQ(reconstruction_loss(t, t).item(), 0.0);
  EXPECT_NEAR(reconstruction_loss(D::full({2, 2}, 1.3), t).item(), 0.002, 1e-15);
  EXPECT_THROW(reconstruction_loss(D::full({2, 3}, 1.0), t), ShapeError);
}

TEST(Decoder, MaskAndRange) {
  CapsNet<double> net(tiny_config(), 3);
  Rng rng = make_rng(11);
  auto v = D({2, 3, 4}, uniform<double>(24, -0.5, 0.5, rng));
  auto out = net.decode(v, {1, 2});
  EXPECT_EQ(out.shape(), (Shape{2, 12, 12, 1}));
  for (double x : out.data()) {
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  // Changing a masked-out capsule leaves the reconstruction untouched.
  auto v2 = v.to_vector();
  for (std::size_t e = 0; e < 4; ++e) v2[0 * 4 + e] += 1.0;  // sample 0, class 0
  auto out2 = net.decode(D({2, 3, 4}, v2), {1, 2});
  EXPECT_EQ(out.to_vector(), out2.to_vector());
}

TEST(CapsNetModel, ForwardProducesBoundedNormsAndArgmax) {
  CapsNet<float> net(CapsNetConfig::desk(), 42);
  Rng rng = make_rng(12);
  auto images = Tensor<float>({2, 64, 64, 1}, uniform<float>(2 * 64 * 64, 0, 1, rng));
  NoGradGuard guard;
  auto out = net.forward(images);
  ASSERT_EQ(out.norms.shape(), (Shape{2, 3}));
  for (std::size_t b = 0; b < 2; ++b) {
    int best = 0;
    for (int k = 0; k < 3; ++k) {
      EXPECT_GE(out.norms[b * 3 + k], 0.0f);
      EXPECT_LT(out.norms[b * 3 + k], 1.0f);
      if (out.norms[b * 3 + k] > out.norms[b * 3 + best]) best = k;
    }
    EXPECT_EQ(out.predictions[b], best);
  }
  EXPECT_EQ(out.recon.shape(), (Shape{2, 64, 64, 1}));
  EXPECT_THROW(net.forward(Tensor<float>::zeros({1, 32, 32, 1})), ShapeError);
}

TEST(CapsNetModel, SameSeedSameParameters) {
  CapsNet<float> a(tiny_config(), 5), b(tiny_config(), 5), c(tiny_config(), 6);
  auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].tensor.to_vector(), pb[i].tensor.to_vector());
    any_diff = any_diff || pa[i].tensor.to_vector() != pc[i].tensor.to_vector();
  }
  EXPECT_TRUE(any_diff);
}

TEST(CapsNetModel, ConfigValidation) {
  auto c = tiny_config();
  c.m_minus = 0.95;
  EXPECT_THROW(CapsNet<double>(c, 1), std::invalid_argument);
  c = tiny_config();
  c.recon_scale = -1;
  EXPECT_THROW(CapsNet<double>(c, 1), std::invalid_argument);
  c = tiny_config();
  c.routing_iterations = 0;
  EXPECT_THROW(CapsNet<double>(c, 1), std::invalid_argument);
}

TEST(CapsNetModel, ConfigJsonRoundTrip) {
  auto c = CapsNetConfig::desk();
  c.routing_gradient = RoutingGradient::final_only;
  nlohmann::json j = c;
  auto back = j.get<CapsNetConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(CapsNetModel, EndToEndGradientMatchesFiniteDifferences) {
  CapsNet<double> net(tiny_config(), 13);
  Rng rng = make_rng(14);
  auto images = D({2, 12, 12, 1}, uniform<double>(288, 0, 1, rng));
  const std::vector<int> labels = {2, 0};
  auto params = net.parameters();
  auto loss = net.total_loss(net.forward(images, &labels), images, labels);
  backward(loss);
  double worst = 0;
  NoGradGuard guard;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto data = params[t].tensor.mutable_data();
    const auto grad = params[t].tensor.grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + 1e-5;
      const double plus = net.total_loss(net.forward(images, &labels), images, labels).item();
      data[i] = saved - 1e-5;
      const double minus = net.total_loss(net.forward(images, &labels), images, labels).item();
      data[i] = saved;
      const double numeric = (plus - minus) / 2e-5;
      const double err =
          std::abs(grad[i] - numeric) / std::max(1e-8, std::abs(grad[i]) + std::abs(numeric));
      EXPECT_LT(err, 1e-4) << params[t].name << "[" << i << "] analytic " << grad[i]
                           << " numeric " << numeric;
      worst = std::max(worst, err);
    }
  }
  RecordProperty("max_relative_error", std::to_string(worst));
}

TEST(CapsNetModel, ClassPermutationLeavesLossUnchanged) {
  auto config = tiny_config();
  CapsNet<double> net(config, 15), permuted(config, 15);
  const std::vector<std::size_t> perm = {2, 0, 1};  // new class k <- old class perm[k]
  auto src = net.parameters();
  auto dst = permuted.parameters();
  const std::size_t dim = config.class_caps.dim;
  for (std::size_t t = 0; t < src.size(); ++t) {
    auto out = dst[t].tensor.mutable_data();
    const auto in = src[t].tensor.data();
    if (src[t].name == "routing.weights") {
      const std::size_t block = config.primary.caps_dim * dim;
      for (std::size_t p = 0; p < config.num_primary(); ++p)
        for (std::size_t k = 0; k < 3; ++k)
          std::copy_n(in.begin() + (p * 3 + perm[k]) * block, block, out.begin() + (p * 3 + k) * block);
    } else if (src[t].name == "decoder.0.weight") {
      const std::size_t width = src[t].tensor.dim(1);
      for (std::size_t k = 0; k < 3; ++k)
        std::copy_n(in.begin() + perm[k] * dim * width, dim * width, out.begin() + k * dim * width);
    }
  }
  Rng rng = make_rng(16);
  auto images = D({3, 12, 12, 1}, uniform<double>(432, 0, 1, rng));
  const std::vector<int> labels = {0, 1, 2};
  std::vector<int> relabeled(3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 3; ++k)
      if (perm[k] == static_cast<std::size_t>(labels[i])) relabeled[i] = static_cast<int>(k);
  }
  NoGradGuard guard;
  auto a = net.forward(images, &labels);
  auto b = permuted.forward(images, &relabeled);
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(b.norms[n * 3 + k], a.norms[n * 3 + perm[k]], 1e-12);
  EXPECT_NEAR(net.total_loss(a, images, labels).item(),
              permuted.total_loss(b, images, relabeled).item(), 1e-12);
}

}  // namespace
}  // namespace sarcaps::caps
