#pragma once

#include "sdfedit/numerics/bspline.hpp"
#include "sdfedit/numerics/layers.hpp"

#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace sdfedit::edit {

struct KanGridConfig {
  double lo = -1.5;
  double hi = 1.5;
  std::size_t intervals = 8;
  std::size_t order = 4;

  nn::BSplineGrid grid() const { return nn::BSplineGrid::uniform(lo, hi, intervals, order); }
};

/// One layer of learnable edge functions. Every (input, output) edge is
///   base_weight * silu(x) + spline_scale * spline(x).
/// An anchored layer subtracts each spline's value at 0, so it maps the zero
/// vector to the zero vector.
class KanLayer {
 public:
  KanLayer(std::string name, std::size_t in, std::size_t out, const KanGridConfig& grid = {},
           bool anchored = false);

  void init(std::mt19937_64& rng);
  void zero();

  nn::Var forward(nn::Tape& t, nn::Var x) const;

  std::size_t in() const noexcept { return in_; }
  std::size_t out() const noexcept { return out_; }
  bool anchored() const noexcept { return anchored_; }
  const nn::BSplineGrid& grid() const noexcept { return grid_; }

  /// (out x in x basis_count)
  nn::Parameter& coefficients() { return coef_; }
  const nn::Parameter& coefficients() const { return coef_; }
  nn::Parameter& spline_scale() { return scale_; }
  nn::Parameter& base_weight() { return base_; }

  void collect(std::vector<nn::Parameter*>& out);
  void collect(std::vector<const nn::Parameter*>& out) const;

 private:
  std::size_t in_;
  std::size_t out_;
  bool anchored_;
  nn::BSplineGrid grid_;
  nn::Parameter coef_;
  nn::Parameter scale_;
  nn::Parameter base_;
};

/// Composition of KAN layers through the widths in `dims`.
class KanNet {
 public:
  KanNet(std::string name, std::vector<std::size_t> dims, const KanGridConfig& grid = {},
         bool anchored = false);

  void init(std::mt19937_64& rng);
  nn::Var forward(nn::Tape& t, nn::Var x) const;

  std::size_t in() const { return layers_.front().in(); }
  std::size_t out() const { return layers_.back().out(); }
  std::vector<KanLayer>& layers() { return layers_; }
  const std::vector<KanLayer>& layers() const { return layers_; }

  void collect(std::vector<nn::Parameter*>& out);
  void collect(std::vector<const nn::Parameter*>& out) const;

 private:
  std::vector<KanLayer> layers_;
};

}  // namespace sdfedit::edit
