#include "sarcaps/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace sarcaps {

GradCheckResult gradient_check(const ScalarFunction& f, std::vector<Tensor<double>> inputs,
                               double eps, std::size_t max_coordinates) {
  std::vector<Tensor<double>> leaves;
  leaves.reserve(inputs.size());
  for (const auto& x : inputs) leaves.emplace_back(x.shape(), x.to_vector(), true);

  Tensor<double> loss = f(leaves);
  backward(loss);

  GradCheckResult result;
  for (std::size_t t = 0; t < leaves.size(); ++t) {
    auto& leaf = leaves[t];
    std::vector<double> analytic(leaf.size(), 0.0);
    if (leaf.has_grad()) std::copy(leaf.grad().begin(), leaf.grad().end(), analytic.begin());

    const std::size_t n = leaf.size();
    const std::size_t step =
        (max_coordinates == 0 || n <= max_coordinates) ? 1 : (n + max_coordinates - 1) / max_coordinates;
    NoGradGuard no_grad;
    for (std::size_t i = 0; i < n; i += step) {
      auto values = leaf.mutable_data();
      const double saved = values[i];
      values[i] = saved + eps;
      const double plus = f(leaves).item();
      values[i] = saved - eps;
      const double minus = f(leaves).item();
      values[i] = saved;

      const double numeric = (plus - minus) / (2 * eps);
      const double denom = std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
      const double err = std::abs(analytic[i] - numeric) / denom;
      ++result.coordinates;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_input = t;
        result.worst_index = i;
        result.analytic = analytic[i];
        result.numeric = numeric;
      }
    }
  }
  return result;
}

double gradient_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                      const Tensor<double>& x, double eps) {
  return gradient_check([&](const std::vector<Tensor<double>>& in) { return f(in[0]); }, {x}, eps)
      .max_relative_error;
}

}  // namespace sarcaps
