#pragma once

// Compact strided-conv classifier with the S (32-16-3) or L (1024-512-3)
// fully-connected head.

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "sarcaps/model.hpp"
#include "sarcaps/tensor.hpp"

namespace sarcaps::cnn {

enum class Head { S, L };

std::string to_string(Head head);
Head parse_head(const std::string& text);

struct CnnConfig {
  struct Block {
    std::size_t out_channels;
    std::size_t kernel = 3;
    std::size_t stride = 2;
  };

  std::size_t input_size = 128;
  std::vector<Block> conv_blocks = {{16}, {32}, {64}, {64}};
  Head head = Head::S;
  std::size_t num_classes = 3;

  static CnnConfig paper(Head head);
  static CnnConfig desk(Head head);

  /// Dense widths after the backbone: {32, 16, classes} or {1024, 512, classes}.
  std::vector<std::size_t> head_widths() const;
  /// Spatial size of the last backbone feature map.
  std::size_t feature_grid() const;
  std::size_t feature_count() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const CnnConfig& c);
void from_json(const nlohmann::json& j, CnnConfig& c);

template <typename T>
class Cnn final : public Classifier<T> {
 public:
  /// Backbone and head draw from separate streams of `seed`, so S and L
  /// models built from one seed share backbone values.
  Cnn(CnnConfig config, std::uint64_t seed);

  const CnnConfig& config() const { return config_; }

  std::string kind() const override { return "cnn"; }
  std::string architecture() const override { return "CNN (" + to_string(config_.head) + ")"; }
  std::size_t input_size() const override { return config_.input_size; }
  std::size_t num_classes() const override { return config_.num_classes; }
  nlohmann::json config_json() const override;
  std::vector<NamedParameter<T>> parameters() const override;

  /// Class probabilities [N, classes].
  Tensor<T> forward(const Tensor<T>& images) const;

  BatchResult<T> run_batch(const Tensor<T>& images, const std::vector<int>& labels) override;
  std::vector<int> predict(const Tensor<T>& images) override;

 private:
  Tensor<T> logits(const Tensor<T>& images) const;

  CnnConfig config_;
  std::vector<Tensor<T>> conv_kernels_, conv_biases_;
  std::vector<Tensor<T>> dense_weights_, dense_biases_;
};

}  // namespace sarcaps::cnn
