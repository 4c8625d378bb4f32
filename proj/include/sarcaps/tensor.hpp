#pragma once

// Dense row-major tensors participating in a dynamic reverse-mode
// differentiation graph. Each op allocates a new node that keeps its inputs
// alive together with a closure propagating the node's gradient into them.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sarcaps/error.hpp"

namespace sarcaps {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  bool is_leaf() const { return inputs.empty(); }

  /// Gradient storage, zero-filled on first access.
  std::span<T> grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<Node<T>>;

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  /// Direct write access; only meaningful on leaves (parameters, inputs).
  std::span<T> mutable_data() { return node_->value; }
  T operator[](std::size_t i) const { return node_->value[i]; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  /// Leaf holding a copy of this tensor's values, cut from the graph.
  Tensor detach() const;
  std::vector<T> to_vector() const { return node_->value; }

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

/// Disables graph construction on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

/// Builds an op result. When no input requires a gradient (or grad mode is
/// off) the result is a plain leaf and `backward` is dropped. Throws
/// NumericError if `value` holds a non-finite entry.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::string_view op,
                      std::initializer_list<Tensor<T>> inputs,
                      std::function<void(Node<T>&)> backward);

struct TapeRecord {
  std::string_view op;
  std::vector<std::size_t> input_ids;
  std::size_t output_id = 0;
};

/// Topologically ordered record of the graph a backward pass walked.
struct GradTape {
  std::vector<TapeRecord> records;
  std::size_t leaf_count = 0;
};

/// Accumulates d(loss)/d(leaf) into every reachable leaf that requires a
/// gradient. Throws ShapeError for non-scalar losses and std::logic_error
/// when the loss is detached from every such leaf.
template <typename T>
GradTape backward(const Tensor<T>& loss);

}  // namespace sarcaps
