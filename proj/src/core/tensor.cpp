#include "sarcaps/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <utility>

namespace sarcaps {

namespace {
thread_local bool t_grad_enabled = true;
}

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_mode_enabled() { return t_grad_enabled; }

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad)
    : node_(std::make_shared<Node<T>>()) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive: " + to_string(shape));
  }
  if (numel(shape) != data.size()) {
    throw ShapeError("shape " + to_string(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<T>{value}, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return node_->value[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(node_->shape, node_->value, false);
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::string_view op,
                      std::initializer_list<Tensor<T>> inputs,
                      std::function<void(Node<T>&)> backward) {
  for (const T& x : value) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string(op) + " produced a non-finite value");
    }
  }
  Tensor<T> out(std::move(shape), std::move(value), false);
  if (!t_grad_enabled) return out;
  bool needs_grad = false;
  for (const auto& in : inputs) needs_grad = needs_grad || in.requires_grad();
  if (!needs_grad) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  node.op = op;
  node.backward = std::move(backward);
  node.inputs.reserve(inputs.size());
  for (const auto& in : inputs) node.inputs.push_back(in.node());
  return out;
}

template <typename T>
GradTape backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward() requires a scalar loss");
  }
  if (!loss.requires_grad()) {
    throw std::logic_error("backward(): loss is detached from every trainable leaf");
  }

  // Iterative post-order DFS yields a topological order (inputs first).
  std::vector<Node<T>*> order;
  std::unordered_map<const Node<T>*, std::size_t> ids;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{loss.node().get(), 0}};
  std::unordered_map<const Node<T>*, bool> seen{{loss.node().get(), true}};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && !seen[child]) {
        seen[child] = true;
        stack.emplace_back(child, 0);
      }
      continue;
    }
    ids[node] = order.size();
    order.push_back(node);
    stack.pop_back();
  }

  GradTape tape;
  for (Node<T>* node : order) {
    if (node->is_leaf()) {
      ++tape.leaf_count;
      continue;
    }
    node->grad.clear();  // intermediate gradients restart on every pass
    TapeRecord rec{node->op, {}, ids[node]};
    for (const auto& in : node->inputs) {
      if (in->requires_grad) rec.input_ids.push_back(ids[in.get()]);
    }
    tape.records.push_back(std::move(rec));
  }

  Node<T>& root = *loss.node();
  if (root.is_leaf()) {
    root.grad_buffer()[0] += T(1);
    return tape;
  }
  root.grad_buffer()[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->is_leaf() || node->grad.empty() || !node->backward) continue;
    node->backward(*node);
  }
  return tape;
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> make_result(Shape, std::vector<float>, std::string_view,
                                   std::initializer_list<Tensor<float>>,
                                   std::function<void(Node<float>&)>);
template Tensor<double> make_result(Shape, std::vector<double>, std::string_view,
                                    std::initializer_list<Tensor<double>>,
                                    std::function<void(Node<double>&)>);
template GradTape backward(const Tensor<float>&);
template GradTape backward(const Tensor<double>&);

}  // namespace sarcaps
