#pragma once

#include "sdfedit/numerics/tensor.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace sdfedit::nn {

/// A trainable tensor plus its accumulated gradient.
struct Parameter {
  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
    grad = Tensor::zeros_like(value);
  }

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
};

/// Handle to a node on a Tape.
class Var {
 public:
  Var() = default;
  bool valid() const noexcept { return id_ != kInvalid; }
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Tape;
  explicit Var(std::size_t id) : id_(id) {}
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id_ = kInvalid;
};

class Tape;
using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

/// Records primitive operations in execution order for a single reverse pass.
///
/// Parameters are referenced, not copied, so they must outlive the tape.
/// Parameters registered through `freeze` enter the graph as constants: the
/// gradient still flows through them to other inputs but is never stored.
class Tape {
 public:
  Var constant(Tensor value);
  /// Leaf whose gradient is tracked (used for gradients w.r.t. inputs).
  Var variable(Tensor value);
  Var parameter(const Parameter& p);

  void freeze(const Parameter& p) { frozen_.insert(&p); }

  const Tensor& value(Var v) const;
  /// Gradient of the last backward root w.r.t. `v`; zeros if none flowed.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }

  /// Reverse pass from a scalar root. Visits every recorded op once, newest
  /// first. A tape can be replayed only once.
  void backward(Var root);

  /// Adds the gradients gathered on this tape into each Parameter::grad.
  void accumulate(std::span<Parameter* const> params) const;

  std::size_t size() const noexcept { return nodes_.size(); }

  // Op-author interface.
  Var record(Tensor value, std::span<const Var> parents, BackwardFn backward);
  /// Gradient accumulator for `v`, allocated on first use.
  Tensor& grad_slot(Var v);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    const Parameter* param = nullptr;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  std::unordered_set<const Parameter*> frozen_;
  bool backward_done_ = false;
};

}  // namespace sdfedit::nn
