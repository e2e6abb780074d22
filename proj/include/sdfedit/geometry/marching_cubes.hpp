#pragma once

#include "sdfedit/geometry/mesh.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace sdfedit::geo {

/// Cubic sampling lattice over [lo, hi]^3 with `resolution` cells per axis,
/// i.e. resolution + 1 samples per axis.
struct GridSpec {
  std::size_t resolution = 64;
  double lo = -1.0;
  double hi = 1.0;

  std::size_t samples_per_axis() const { return resolution + 1; }
  std::size_t sample_count() const {
    const auto n = samples_per_axis();
    return n * n * n;
  }
  double spacing() const { return (hi - lo) / static_cast<double>(resolution); }
  double cell_diagonal() const { return spacing() * 1.7320508075688772; }
  /// x varies fastest.
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    const auto n = samples_per_axis();
    return (k * n + j) * n + i;
  }
  Vec3 point(std::size_t i, std::size_t j, std::size_t k) const {
    const double h = spacing();
    return {lo + h * static_cast<double>(i), lo + h * static_cast<double>(j),
            lo + h * static_cast<double>(k)};
  }
};

struct ScalarGrid {
  GridSpec spec;
  std::vector<double> values;  // in GridSpec::index order
};

/// All lattice points in index order, for batched field evaluation.
std::vector<Vec3> grid_points(const GridSpec& spec);
ScalarGrid sample_grid(const GridSpec& spec, const std::function<double(const Vec3&)>& field);

/// Extracts the `iso` level set. Vertices are shared between adjacent cells and
/// triangles wind counter-clockwise around the direction of increasing field.
/// Throws std::invalid_argument for resolution < 8, a size mismatch, or a
/// non-finite sample.
Mesh marching_cubes(const ScalarGrid& grid, double iso = 0.0);

}  // namespace sdfedit::geo
