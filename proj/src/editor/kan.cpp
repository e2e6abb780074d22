#include "sdfedit/editor/kan.hpp"

#include <cmath>
#include <stdexcept>

namespace sdfedit::edit {

KanLayer::KanLayer(std::string name, std::size_t in, std::size_t out, const KanGridConfig& grid,
                   bool anchored)
    : in_(in),
      out_(out),
      anchored_(anchored),
      grid_(grid.grid()),
      coef_(name + ".coef", nn::Tensor({out, in, grid_.basis_count()})),
      scale_(name + ".spline_scale", nn::Tensor({out, in})),
      base_(name + ".base_weight", nn::Tensor({out, in})) {
  if (in < 1 || out < 1) throw std::invalid_argument("kan layer '" + name + "' needs positive widths");
}

void KanLayer::init(std::mt19937_64& rng) {
  const double fan = 1.0 / std::sqrt(static_cast<double>(in_));
  std::normal_distribution<double> noise(0.0, 0.1);
  std::uniform_real_distribution<double> u(-fan, fan);
  for (double& v : coef_.value.values()) v = noise(rng);
  scale_.value.fill(fan);
  for (double& v : base_.value.values()) v = u(rng);
}

void KanLayer::zero() {
  coef_.value.fill(0.0);
  scale_.value.fill(0.0);
  base_.value.fill(0.0);
}

nn::Var KanLayer::forward(nn::Tape& t, nn::Var x) const {
  if (t.value(x).cols() != in_) {
    throw nn::ShapeError("kan layer '" + coef_.name + "' expects " + std::to_string(in_) + " inputs, got " +
                         nn::to_string(t.value(x).shape()));
  }
  return nn::spline_edges(t, x, t.parameter(coef_), t.parameter(scale_), t.parameter(base_), grid_, anchored_);
}

void KanLayer::collect(std::vector<nn::Parameter*>& out) {
  out.push_back(&coef_);
  out.push_back(&scale_);
  out.push_back(&base_);
}

void KanLayer::collect(std::vector<const nn::Parameter*>& out) const {
  out.push_back(&coef_);
  out.push_back(&scale_);
  out.push_back(&base_);
}

KanNet::KanNet(std::string name, std::vector<std::size_t> dims, const KanGridConfig& grid, bool anchored) {
  if (dims.size() < 2) throw std::invalid_argument("kan net '" + name + "' needs at least two widths");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    layers_.emplace_back(name + ".k" + std::to_string(i), dims[i], dims[i + 1], grid, anchored);
  }
}

void KanNet::init(std::mt19937_64& rng) {
  for (auto& l : layers_) l.init(rng);
}

nn::Var KanNet::forward(nn::Tape& t, nn::Var x) const {
  for (const auto& l : layers_) x = l.forward(t, x);
  return x;
}

void KanNet::collect(std::vector<nn::Parameter*>& out) {
  for (auto& l : layers_) l.collect(out);
}

void KanNet::collect(std::vector<const nn::Parameter*>& out) const {
  for (const auto& l : layers_) l.collect(out);
}

}  // namespace sdfedit::edit
