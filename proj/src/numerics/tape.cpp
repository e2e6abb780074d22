#include "sdfedit/numerics/tape.hpp"

#include <stdexcept>
#include <unordered_map>

namespace sdfedit::nn {

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(nodes_.size() - 1);
}

Var Tape::parameter(const Parameter& p) {
  Node n;
  n.external = &p.value;
  if (!frozen_.contains(&p)) {
    n.param = &p;
    n.requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var(nodes_.size() - 1);
}

const Tensor& Tape::value(Var v) const {
  const Node& n = nodes_.at(v.id());
  return n.external ? *n.external : n.value;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (n.grad.size() == 0 && value(v).size() != 0) return Tensor::zeros_like(value(v));
  return n.grad;
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn backward) {
  bool needs = false;
  for (Var p : parents) needs = needs || nodes_.at(p.id()).requires_grad;
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(nodes_.size() - 1);
}

Tensor& Tape::grad_slot(Var v) {
  Node& n = nodes_.at(v.id());
  if (n.grad.size() == 0) n.grad = Tensor::zeros_like(value(v));
  return n.grad;
}

void Tape::backward(Var root) {
  if (backward_done_) throw std::logic_error("tape already replayed; record a new tape");
  const Tensor& out = value(root);
  if (out.size() != 1) {
    throw ShapeError("backward requires a scalar root, got shape " + to_string(out.shape()));
  }
  backward_done_ = true;
  grad_slot(root)[0] = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

void Tape::accumulate(std::span<Parameter* const> params) const {
  std::unordered_map<const Parameter*, Parameter*> wanted;
  for (Parameter* p : params) wanted.emplace(p, p);
  for (const Node& n : nodes_) {
    if (!n.param || n.grad.size() == 0) continue;
    auto it = wanted.find(n.param);
    if (it == wanted.end()) continue;
    Tensor& g = it->second->grad;
    if (g.size() != n.grad.size()) g = Tensor::zeros_like(it->second->value);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
  }
}

}  // namespace sdfedit::nn
