#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "caah/nn/tensor.hpp"

namespace caah::nn {

template <typename T>
class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename T>
class Expr {
 public:
  Expr() = default;
  Expr(Graph<T>* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph<T>& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  const Tensor<T>& value() const { return graph_->value(id_); }
  const Shape& shape() const { return value().shape(); }

 private:
  Graph<T>* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Tape for reverse-mode differentiation. Nodes are appended in evaluation
// order, so reverse insertion order is a valid topological order for backward.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  // A graph built with track_gradients = false records no backward closures;
  // use it for inference.
  explicit Graph(bool track_gradients) : tracking_(track_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Expr<T> constant(Tensor<T> value) {
    Node node;
    node.owned = std::move(value);
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
  }

  // The parameter's value is referenced, not copied; backward accumulates
  // into parameter.grad.
  Expr<T> parameter(Parameter<T>& param) {
    Node node;
    node.ref = &param.value;
    node.param = &param;
    node.requires_grad = tracking_;
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
  }

  // Used by op implementations.
  Expr<T> emit(Tensor<T> value, std::initializer_list<std::size_t> parents, BackwardFn backward) {
    return emit(std::move(value), std::vector<std::size_t>(parents), std::move(backward));
  }

  Expr<T> emit(Tensor<T> value, const std::vector<std::size_t>& parents, BackwardFn backward) {
    Node node;
    node.owned = std::move(value);
    for (auto p : parents) node.requires_grad = node.requires_grad || nodes_.at(p).requires_grad;
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
  }

  const Tensor<T>& value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.ref ? *n.ref : n.owned;
  }

  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  // Gradient buffer of a node, zero-initialised on first access.
  Tensor<T>& grad(std::size_t id) {
    Node& n = nodes_.at(id);
    if (!n.has_grad) {
      n.grad = Tensor<T>(value(id).shape());
      n.has_grad = true;
    }
    return n.grad;
  }

  // Seeds d(root)/d(root) = seed and propagates to every parameter leaf.
  void backward(Expr<T> root, T seed = T{1});

  void mark_stochastic() { stochastic_ = true; }
  bool stochastic() const { return stochastic_; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* ref = nullptr;
    Tensor<T> grad;
    bool has_grad = false;
    bool requires_grad = false;
    Parameter<T>* param = nullptr;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool stochastic_ = false;
  bool tracking_ = true;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace caah::nn
