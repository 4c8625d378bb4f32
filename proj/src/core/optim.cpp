#include "sarcaps/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace sarcaps {

namespace {

template <typename T>
void adam_update(const std::vector<Tensor<T>>& params, const std::vector<std::span<const T>>& grads,
                 AdamState<T>& state, double lr, const AdamConfig& config) {
  if (grads.size() != params.size()) throw ShapeError("adam_step: one gradient per parameter required");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), T(0));
      state.v.emplace_back(p.size(), T(0));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state does not match parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].size() || (!grads[i].empty() && grads[i].size() != params[i].size())) {
      throw ShapeError("adam_step: shape mismatch for parameter " + std::to_string(i));
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
  const T step = static_cast<T>(lr / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T eps = static_cast<T>(config.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T> param = params[i];
    auto value = param.mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    const bool has_grad = !grads[i].empty();
    for (std::size_t k = 0; k < value.size(); ++k) {
      const T g = has_grad ? grads[i][k] : T(0);
      m[k] = b1 * m[k] + (T(1) - b1) * g;
      v[k] = b2 * v[k] + (T(1) - b2) * g * g;
      value[k] -= step * m[k] / (std::sqrt(v[k] * inv_c2) + eps);
    }
  }
}

}  // namespace

template <typename T>
void adam_step(const std::vector<Tensor<T>>& params, const std::vector<std::vector<T>>& grads,
               AdamState<T>& state, double lr, const AdamConfig& config) {
  std::vector<std::span<const T>> views(grads.begin(), grads.end());
  adam_update(params, views, state, lr, config);
}

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  if (config_.lr <= 0 || config_.beta1 < 0 || config_.beta1 >= 1 || config_.beta2 < 0 || config_.beta2 >= 1 ||
      config_.eps <= 0) {
    throw std::invalid_argument("Adam: invalid hyperparameters");
  }
}

template <typename T>
void Adam<T>::step(double lr) {
  std::vector<std::span<const T>> grads;
  grads.reserve(params_.size());
  for (const auto& p : params_) grads.push_back(p.grad());
  adam_update(params_, grads, state_, lr, config_);
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

double lr_schedule(double base_lr, double decay, std::size_t epoch) {
  return base_lr * std::pow(decay, static_cast<double>(epoch));
}

template void adam_step(const std::vector<Tensor<float>>&, const std::vector<std::vector<float>>&,
                        AdamState<float>&, double, const AdamConfig&);
template void adam_step(const std::vector<Tensor<double>>&, const std::vector<std::vector<double>>&,
                        AdamState<double>&, double, const AdamConfig&);
template class Adam<float>;
template class Adam<double>;

}  // namespace sarcaps
