#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sarcaps/tensor.hpp"

namespace sarcaps {

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
struct BatchResult {
  Tensor<T> loss;  // mean over the batch, shape [1]
  std::vector<int> predictions;
};

/// Common surface the trainer drives. Images are NHWC single-channel tiles
/// with values in [0, 1].
template <typename T>
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string kind() const = 0;
  /// Display name used in report rows, e.g. "CapsNet" or "CNN (S)".
  virtual std::string architecture() const = 0;
  virtual std::size_t input_size() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual nlohmann::json config_json() const = 0;

  /// Handles share storage with the model; mutate values through them.
  virtual std::vector<NamedParameter<T>> parameters() const = 0;

  /// Forward pass producing the training loss and the predicted classes.
  virtual BatchResult<T> run_batch(const Tensor<T>& images, const std::vector<int>& labels) = 0;

  virtual std::vector<int> predict(const Tensor<T>& images) = 0;
};

}  // namespace sarcaps
