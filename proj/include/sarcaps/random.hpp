#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sarcaps/tensor.hpp"

namespace sarcaps {

using Rng = std::mt19937_64;

/// Derives an independent stream from a base seed and a salt.
inline Rng make_rng(std::uint64_t seed, std::uint64_t salt = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  return Rng(seq);
}

/// Normal(0, stddev) samples re-drawn until within two standard deviations.
template <typename T>
std::vector<T> truncated_normal(std::size_t count, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<T> out(count);
  for (auto& v : out) {
    double z;
    do {
      z = dist(rng);
    } while (z < -2.0 || z > 2.0);
    v = static_cast<T>(z * stddev);
  }
  return out;
}

template <typename T>
std::vector<T> standard_normal(std::size_t count, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<T> out(count);
  for (auto& v : out) v = static_cast<T>(dist(rng));
  return out;
}

template <typename T>
std::vector<T> uniform(std::size_t count, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<T> out(count);
  for (auto& v : out) v = static_cast<T>(dist(rng));
  return out;
}

/// Trainable leaf with He-style truncated-normal values, std sqrt(2 / fan_in).
template <typename T>
Tensor<T> he_parameter(Shape shape, std::size_t fan_in, Rng& rng) {
  const std::size_t n = numel(shape);
  return Tensor<T>(std::move(shape),
                   truncated_normal<T>(n, std::sqrt(2.0 / static_cast<double>(fan_in)), rng), true);
}

template <typename T>
Tensor<T> zero_parameter(Shape shape) {
  return Tensor<T>::zeros(std::move(shape), true);
}

}  // namespace sarcaps
