#include "sarcaps/gradient_suite.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "sarcaps/capsnet.hpp"
#include "sarcaps/gradcheck.hpp"
#include "sarcaps/ops.hpp"
#include "sarcaps/random.hpp"

namespace sarcaps::gradsuite {

namespace {

using T = Tensor<double>;
using Inputs = std::vector<T>;
using Case = std::function<GradCheckResult(Rng&, double)>;

T random(Shape shape, Rng& rng, double lo = -1, double hi = 1) {
  const std::size_t n = numel(shape);
  return T(std::move(shape), uniform<double>(n, lo, hi, rng), true);
}

/// Values bounded away from the kinks at 0 (relu family).
T away_from_zero(Shape shape, Rng& rng) {
  auto t = random(std::move(shape), rng);
  for (auto& v : t.mutable_data()) v = v < 0 ? v - 0.05 : v + 0.05;
  return t;
}

/// sum(r * out) for a fixed random r, turning any output into a scalar.
T project(const T& out, const std::vector<double>& r) { return ops::sum(ops::mul_constant(out, r)); }

GradCheckResult run(const std::function<T(const Inputs&)>& out_fn, Inputs inputs, Rng& rng, double eps) {
  std::vector<double> r;
  {
    NoGradGuard probe;
    r = uniform<double>(out_fn(inputs).size(), -1, 1, rng);
  }
  return gradient_check([&](const Inputs& x) { return project(out_fn(x), r); }, std::move(inputs), eps);
}

const std::map<std::string, Case>& cases() {
  static const std::map<std::string, Case> table = {
      {"conv2d",
       [](Rng& rng, double eps) {
         const std::size_t stride = 1 + rng() % 2;
         return run([stride](const Inputs& x) { return ops::conv2d(x[0], x[1], stride); },
                    {random({2, 7, 7, 3}, rng), random({3, 3, 3, 4}, rng)}, rng, eps);
       }},
      {"conv_transpose2d",
       [](Rng& rng, double eps) {
         const std::size_t stride = 1 + rng() % 2;
         return run([stride](const Inputs& x) { return ops::conv_transpose2d(x[0], x[1], stride); },
                    {random({2, 4, 4, 3}, rng), random({4, 4, 2, 3}, rng)}, rng, eps);
       }},
      {"matmul",
       [](Rng& rng, double eps) {
         return run([](const Inputs& x) { return ops::linear(x[0], x[1], x[2]); },
                    {random({4, 5}, rng), random({5, 3}, rng), random({3}, rng)}, rng, eps);
       }},
      {"activations",
       [](Rng& rng, double eps) {
         return run(
             [](const Inputs& x) {
               auto a = ops::add(ops::relu(x[0]), ops::leaky_relu(x[0], 0.2));
               return ops::add(a, ops::add(ops::sigmoid(x[0]), ops::tanh(ops::scale(x[0], 2.0))));
             },
             {away_from_zero({3, 6}, rng)}, rng, eps);
       }},
      {"softmax",
       [](Rng& rng, double eps) {
         return run([](const Inputs& x) { return ops::softmax(x[0], 1); }, {random({3, 5}, rng, -3, 3)}, rng,
                    eps);
       }},
      {"squash",
       [](Rng& rng, double eps) {
         return run([](const Inputs& x) { return caps::squash(x[0], 2); }, {random({4, 3, 8}, rng)}, rng, eps);
       }},
      {"routing",
       [](Rng& rng, double eps) {
         return run([](const Inputs& x) { return caps::dynamic_routing(x[0], 3).v; },
                    {random({2, 6, 3, 4}, rng)}, rng, eps);
       }},
      {"margin_loss",
       [](Rng& rng, double eps) {
         // Norms kept clear of the hinge points m- = 0.1 and m+ = 0.9.
         auto norms = random({4, 3}, rng, 0, 1);
         for (auto& v : norms.mutable_data()) {
           if (std::abs(v - 0.1) < 0.02) v += 0.05;
           if (std::abs(v - 0.9) < 0.02) v -= 0.05;
         }
         std::vector<int> labels(4);
         for (auto& l : labels) l = static_cast<int>(rng() % 3);
         const auto targets = ops::one_hot<double>(labels, 3);
         return gradient_check([targets](const Inputs& x) { return caps::margin_loss(x[0], targets); }, {norms},
                               eps);
       }},
      {"reconstruction_loss",
       [](Rng& rng, double eps) {
         auto target = random({2, 4, 4, 1}, rng, 0, 1);
         target.set_requires_grad(false);
         return gradient_check(
             [target](const Inputs& x) { return caps::reconstruction_loss(x[0], target); },
             {random({2, 4, 4, 1}, rng, 0, 1)}, eps);
       }},
      {"cross_entropy",
       [](Rng& rng, double eps) {
         std::vector<int> labels(4);
         for (auto& l : labels) l = static_cast<int>(rng() % 3);
         return gradient_check(
             [labels](const Inputs& x) { return ops::cross_entropy(ops::softmax(x[0], 1), labels); },
             {random({4, 3}, rng, -2, 2)}, eps);
       }},
      {"instance_norm",
       [](Rng& rng, double eps) {
         return run([](const Inputs& x) { return ops::instance_norm(x[0]); }, {random({2, 3, 3, 2}, rng)}, rng,
                    eps);
       }},
      {"bce_with_logits",
       [](Rng& rng, double eps) {
         const double target = static_cast<double>(rng() % 2);
         return gradient_check([target](const Inputs& x) { return ops::bce_with_logits(x[0], target); },
                               {random({5, 1}, rng, -4, 4)}, eps);
       }},
  };
  return table;
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"conv2d",      "conv_transpose2d", "matmul",        "activations",   "softmax",       "squash",
          "routing",     "margin_loss",      "reconstruction_loss", "cross_entropy", "instance_norm", "bce_with_logits"};
}

SuiteResult run_suite(const std::string& name, std::size_t seeds, std::uint64_t base_seed, double eps) {
  const auto it = cases().find(name);
  if (it == cases().end()) throw std::invalid_argument("unknown gradient suite '" + name + "'");
  SuiteResult result{name, seeds, 0, base_seed};
  for (std::size_t k = 0; k < seeds; ++k) {
    Rng rng = make_rng(base_seed + k, 0x6AD);
    const auto r = it->second(rng, eps);
    if (k == 0 || r.max_relative_error > result.max_relative_error) {
      result.max_relative_error = r.max_relative_error;
      result.worst_seed = base_seed + k;
    }
  }
  return result;
}

}  // namespace sarcaps::gradsuite
