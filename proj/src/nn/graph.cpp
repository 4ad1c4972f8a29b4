#include "caah/nn/graph.hpp"

#include <sstream>

namespace caah::nn {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

template <typename T>
void Graph<T>::backward(Expr<T> root, T seed) {
  if (&root.graph() != this) throw std::invalid_argument("backward: expression from another graph");
  if (value(root.id()).size() != 1) {
    throw std::invalid_argument("backward: root must be a scalar, got shape " +
                                shape_string(value(root.id()).shape()));
  }
  if (!nodes_[root.id()].requires_grad) return;
  grad(root.id())[0] += seed;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.param) {
      auto& dst = n.param->grad.storage();
      const auto& src = n.grad.storage();
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
    } else if (n.backward) {
      n.backward(*this, i);
    }
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace caah::nn
