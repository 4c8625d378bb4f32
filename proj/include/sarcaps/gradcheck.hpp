#pragma once

#include <functional>
#include <vector>

#include "sarcaps/tensor.hpp"

namespace sarcaps {

using ScalarFunction = std::function<Tensor<double>(const std::vector<Tensor<double>>&)>;

struct GradCheckResult {
  double max_relative_error = 0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double analytic = 0;
  double numeric = 0;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients of `f` with respect to every tensor in
/// `inputs` against central differences with step `eps`. The relative error
/// per coordinate is |a - n| / max(1e-8, |a| + |n|). `max_coordinates`
/// (0 = all) caps how many coordinates per input are probed; the probed set
/// is a deterministic stride through the tensor.
GradCheckResult gradient_check(const ScalarFunction& f, std::vector<Tensor<double>> inputs,
                               double eps = 1e-5, std::size_t max_coordinates = 0);

/// Single-input convenience overload.
double gradient_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                      const Tensor<double>& x, double eps = 1e-5);

}  // namespace sarcaps
