#include "sdfedit/numerics/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace sdfedit::nn {

Var activate(Tape& t, Var x, Activation a) {
  switch (a) {
    case Activation::kNone:
      return x;
    case Activation::kRelu:
      return relu(t, x);
    case Activation::kTanh:
      return tanh(t, x);
    case Activation::kSigmoid:
      return sigmoid(t, x);
    case Activation::kSilu:
      return silu(t, x);
  }
  return x;
}

Linear::Linear(std::string name, std::size_t in, std::size_t out, bool bias)
    : in_(in), out_(out), weight_(name + ".weight", Tensor({out, in})) {
  if (bias) bias_.emplace(name + ".bias", Tensor({out}));
}

void Linear::init(std::mt19937_64& rng, double gain) {
  const double bound = gain * std::sqrt(6.0 / static_cast<double>(in_));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& w : weight_.value.values()) w = u(rng);
  if (bias_) bias_->value.fill(0.0);
}

void Linear::zero() {
  weight_.value.fill(0.0);
  if (bias_) bias_->value.fill(0.0);
}

Var Linear::forward(Tape& t, Var x) const {
  const Tensor& xv = t.value(x);
  if (xv.cols() != in_) {
    throw ShapeError("layer '" + weight_.name + "' expects input [*, " + std::to_string(in_) +
                     "], got " + to_string(xv.shape()));
  }
  Var w = t.parameter(weight_);
  Var b = bias_ ? t.parameter(*bias_) : Var{};
  return linear(t, x, w, b);
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (bias_) out.push_back(&*bias_);
}

void Linear::collect(std::vector<const Parameter*>& out) const {
  out.push_back(&weight_);
  if (bias_) out.push_back(&*bias_);
}

Mlp::Mlp(std::string name, std::vector<std::size_t> dims, Activation hidden, Activation output,
         bool bias)
    : hidden_(hidden), output_(output) {
  if (dims.size() < 2) throw std::invalid_argument("mlp needs at least input and output dims");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    layers_.emplace_back(name + ".l" + std::to_string(i), dims[i], dims[i + 1], bias);
  }
}

void Mlp::init(std::mt19937_64& rng) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const bool last = i + 1 == layers_.size();
    layers_[i].init(rng, last ? 1.0 / std::sqrt(2.0) : 1.0);
  }
}

Var Mlp::forward(Tape& t, Var x) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].forward(t, x);
    x = activate(t, x, i + 1 == layers_.size() ? output_ : hidden_);
  }
  return x;
}

void Mlp::collect(std::vector<Parameter*>& out) {
  for (auto& l : layers_) l.collect(out);
}

void Mlp::collect(std::vector<const Parameter*>& out) const {
  for (const auto& l : layers_) l.collect(out);
}

std::vector<NamedTensor> snapshot(const std::vector<const Parameter*>& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back({p->name, p->value});
  return out;
}

void restore(const std::vector<Parameter*>& params, const std::vector<NamedTensor>& state) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& nt : state) by_name.emplace(nt.name, &nt.value);
  for (Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint lacks tensor '" + p->name + "'");
    if (!it->second->same_shape(p->value)) {
      throw ShapeError("tensor '" + p->name + "' has shape " + to_string(it->second->shape()) +
                       ", expected " + to_string(p->value.shape()));
    }
    p->value = *it->second;
    p->grad = Tensor::zeros_like(p->value);
  }
}

void zero_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) {
    if (p->grad.size() != p->value.size()) p->grad = Tensor::zeros_like(p->value);
    p->zero_grad();
  }
}

}  // namespace sdfedit::nn
