#pragma once

#include <functional>
#include <memory>

#include "sdnet/nn/tensor.hpp"

namespace sdnet::nn {

struct Node;
using Var = std::shared_ptr<Node>;

/// One vertex of the reverse-mode tape. Edges point to parents only, so the
/// graph is an acyclic DAG of shared_ptrs that frees itself after a step.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<Var> parents;
  /// Accumulates self.grad into the parents' grads. Null for leaves.
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad() {
    if (grad.empty()) grad = Tensor::zeros_like(value);
    return grad;
  }
};

inline Var make_leaf(Tensor value, bool requires_grad = false) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

inline Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p && p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->backward_fn = std::move(backward);
  return n;
}

/// Reverse accumulation from a scalar root; seeds d(root)/d(root) = 1.
void backward(const Var& root);

/// Cuts the tape: same value, no parents, no gradient flow.
inline Var detach(const Var& x) { return make_leaf(x->value, false); }

}  // namespace sdnet::nn
