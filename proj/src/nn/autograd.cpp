#include "sdnet/nn/autograd.hpp"

#include <unordered_set>

namespace sdnet::nn {

namespace {

// Iterative post-order DFS; recursion would overflow on deep tapes.
void topo_sort(const Var& root, std::vector<Node*>& order) {
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Node* child = node->parents[next_child].get();
      ++next_child;
      if (child && child->requires_grad && !visited.count(child)) {
        visited.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

}  // namespace

void backward(const Var& root) {
  if (!root) throw Error("backward on null node");
  if (root->value.size() != 1) throw ShapeMismatch("backward requires a scalar root");
  if (!root->requires_grad) return;

  std::vector<Node*> order;
  topo_sort(root, order);

  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

}  // namespace sdnet::nn
