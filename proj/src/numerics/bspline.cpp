#include "sdfedit/numerics/bspline.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace sdfedit::nn {

BSplineGrid::BSplineGrid(std::vector<double> knots, std::size_t order)
    : knots_(std::move(knots)), order_(order) {
  if (order_ < 1) throw std::invalid_argument("spline order must be >= 1");
  if (knots_.size() < order_ + 1) {
    throw std::invalid_argument("need at least order + 1 knots, got " +
                                std::to_string(knots_.size()));
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) {
      throw std::invalid_argument("knots must be strictly increasing (index " +
                                  std::to_string(i) + ")");
    }
  }
}

BSplineGrid BSplineGrid::uniform(double lo, double hi, std::size_t intervals, std::size_t order) {
  if (intervals < 1 || !(hi > lo)) throw std::invalid_argument("invalid uniform grid");
  const double h = (hi - lo) / static_cast<double>(intervals);
  const std::size_t pad = order - 1;
  std::vector<double> knots(intervals + 1 + 2 * pad);
  for (std::size_t j = 0; j < knots.size(); ++j) {
    knots[j] = lo + (static_cast<double>(j) - static_cast<double>(pad)) * h;
  }
  return BSplineGrid(std::move(knots), order);
}

namespace {

// Triangular Cox-de Boor table. `level` receives the order-`target` bases of
// length knots-target; `lower` (optional) the order-(target-1) bases.
void cox_de_boor(std::span<const double> t, double x, std::size_t target,
                 std::vector<double>& level, std::vector<double>* lower) {
  const std::size_t m = t.size();
  level.assign(m - 1, 0.0);
  if (x < t.front() || x >= t.back()) {
    level.assign(m - target, 0.0);
    if (lower) lower->assign(m - target + 1, 0.0);
    return;
  }
  auto it = std::upper_bound(t.begin(), t.end(), x);
  level[static_cast<std::size_t>(it - t.begin()) - 1] = 1.0;
  for (std::size_t k = 2; k <= target; ++k) {
    if (k == target && lower) *lower = level;
    std::vector<double> next(m - k, 0.0);
    for (std::size_t i = 0; i + k < m; ++i) {
      double left = 0.0;
      double right = 0.0;
      if (level[i] != 0.0) left = (x - t[i]) / (t[i + k - 1] - t[i]) * level[i];
      if (level[i + 1] != 0.0) right = (t[i + k] - x) / (t[i + k] - t[i + 1]) * level[i + 1];
      next[i] = left + right;
    }
    level = std::move(next);
  }
  if (target == 1) {
    level.resize(m - 1);
    if (lower) lower->clear();
  }
}

}  // namespace

void BSplineGrid::evaluate(double x, std::span<double> out) const {
  std::vector<double> level;
  cox_de_boor(knots_, x, order_, level, nullptr);
  std::copy(level.begin(), level.end(), out.begin());
}

void BSplineGrid::evaluate(double x, std::span<double> out, std::span<double> dout) const {
  std::vector<double> level;
  std::vector<double> lower;
  cox_de_boor(knots_, x, order_, level, order_ > 1 ? &lower : nullptr);
  std::copy(level.begin(), level.end(), out.begin());
  const std::size_t n = basis_count();
  if (order_ == 1) {
    std::fill(dout.begin(), dout.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
    return;
  }
  const double k1 = static_cast<double>(order_ - 1);
  const auto& t = knots_;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = lower[i] / (t[i + order_ - 1] - t[i]);
    const double b = lower[i + 1] / (t[i + order_] - t[i + 1]);
    dout[i] = k1 * (a - b);
  }
}

std::vector<double> bspline_basis(double x, const BSplineGrid& grid) {
  std::vector<double> out(grid.basis_count());
  grid.evaluate(x, out);
  return out;
}

}  // namespace sdfedit::nn
