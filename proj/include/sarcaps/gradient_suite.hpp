#pragma once

// Seeded 64-bit finite-difference checks over the differentiable building
// blocks, shared by the CLI and the acceptance suite.

#include <cstdint>
#include <string>
#include <vector>

namespace sarcaps::gradsuite {

struct SuiteResult {
  std::string name;
  std::size_t seeds = 0;
  double max_relative_error = 0;
  std::uint64_t worst_seed = 0;
};

/// conv2d, conv_transpose2d, matmul, activations, softmax, squash, routing,
/// margin_loss, reconstruction_loss, cross_entropy, instance_norm, bce_with_logits.
std::vector<std::string> suite_names();

/// Runs one suite over seeds base_seed .. base_seed + seeds - 1 with central
/// differences of step eps. Throws std::invalid_argument for unknown names.
SuiteResult run_suite(const std::string& name, std::size_t seeds = 20, std::uint64_t base_seed = 1,
                      double eps = 1e-5);

}  // namespace sarcaps::gradsuite
