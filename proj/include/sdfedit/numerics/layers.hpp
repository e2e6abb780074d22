#pragma once

#include "sdfedit/numerics/ops.hpp"

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sdfedit::nn {

enum class Activation { kNone, kRelu, kTanh, kSigmoid, kSilu };

Var activate(Tape& t, Var x, Activation a);

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Dense layer y = x W^T + b with W of shape (out x in).
class Linear {
 public:
  Linear(std::string name, std::size_t in, std::size_t out, bool bias = true);

  /// He-uniform weights scaled by `gain`; zero bias.
  void init(std::mt19937_64& rng, double gain = 1.0);
  void zero();

  /// Rejects inputs whose column count is not `in`, reporting both shapes.
  Var forward(Tape& t, Var x) const;

  std::size_t in() const noexcept { return in_; }
  std::size_t out() const noexcept { return out_; }
  bool has_bias() const noexcept { return bias_.has_value(); }

  Parameter& weight() { return weight_; }
  const Parameter& weight() const { return weight_; }
  Parameter* bias() { return bias_ ? &*bias_ : nullptr; }
  const Parameter* bias() const { return bias_ ? &*bias_ : nullptr; }

  void collect(std::vector<Parameter*>& out);
  void collect(std::vector<const Parameter*>& out) const;

 private:
  std::size_t in_;
  std::size_t out_;
  Parameter weight_;
  std::optional<Parameter> bias_;
};

/// Chain of Linear layers with a shared hidden activation.
class Mlp {
 public:
  Mlp(std::string name, std::vector<std::size_t> dims, Activation hidden, Activation output,
      bool bias = true);

  void init(std::mt19937_64& rng);
  Var forward(Tape& t, Var x) const;

  std::size_t in() const { return layers_.front().in(); }
  std::size_t out() const { return layers_.back().out(); }
  std::vector<Linear>& layers() { return layers_; }
  const std::vector<Linear>& layers() const { return layers_; }

  void collect(std::vector<Parameter*>& out);
  void collect(std::vector<const Parameter*>& out) const;

 private:
  std::vector<Linear> layers_;
  Activation hidden_;
  Activation output_;
};

/// Snapshot of parameter values keyed by parameter name.
std::vector<NamedTensor> snapshot(const std::vector<const Parameter*>& params);
/// Copies named tensors into matching parameters; every parameter must be
/// present with an identical shape.
void restore(const std::vector<Parameter*>& params, const std::vector<NamedTensor>& state);

void zero_grads(const std::vector<Parameter*>& params);

}  // namespace sdfedit::nn
