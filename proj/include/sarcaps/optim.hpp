#pragma once

#include <cstdint>
#include <vector>

#include "sarcaps/tensor.hpp"

namespace sarcaps {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m, v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update of `params` in place. Empty gradient
/// buffers count as zero gradients.
template <typename T>
void adam_step(const std::vector<Tensor<T>>& params, const std::vector<std::vector<T>>& grads,
               AdamState<T>& state, double lr, const AdamConfig& config);

/// Owns Adam moments for a fixed parameter list and reads gradients from the
/// parameters themselves.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamConfig config);

  void step(double lr);
  void step() { step(config_.lr); }
  void zero_grad();

  const AdamState<T>& state() const { return state_; }
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<Tensor<T>> params_;
  AdamConfig config_;
  AdamState<T> state_;
};

/// base_lr * decay^epoch.
double lr_schedule(double base_lr, double decay, std::size_t epoch);

}  // namespace sarcaps
