#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sdfedit::nn {

/// Knot vector plus spline order (order 1 = piecewise constant, 4 = cubic).
///
/// `uniform` builds the core grid [lo, hi] with `intervals` cells and pads
/// order-1 extra knots on each side, giving intervals + order - 1 basis
/// functions. Partition of unity holds on the core span; outside the full
/// knot range every basis value is zero.
class BSplineGrid {
 public:
  BSplineGrid(std::vector<double> knots, std::size_t order);
  static BSplineGrid uniform(double lo, double hi, std::size_t intervals, std::size_t order);

  std::size_t order() const noexcept { return order_; }
  std::size_t basis_count() const noexcept { return knots_.size() - order_; }
  std::span<const double> knots() const noexcept { return knots_; }
  /// Range where the bases sum to one.
  double span_lo() const noexcept { return knots_[order_ - 1]; }
  double span_hi() const noexcept { return knots_[knots_.size() - order_]; }

  /// Basis values at x; `out` must hold basis_count() entries.
  void evaluate(double x, std::span<double> out) const;
  /// Basis values and their x-derivatives.
  void evaluate(double x, std::span<double> out, std::span<double> dout) const;

 private:
  std::vector<double> knots_;
  std::size_t order_;
};

std::vector<double> bspline_basis(double x, const BSplineGrid& grid);

}  // namespace sdfedit::nn
