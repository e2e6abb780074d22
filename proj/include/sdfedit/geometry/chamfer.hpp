#pragma once

#include "sdfedit/geometry/mesh.hpp"

#include <cstdint>
#include <vector>

namespace sdfedit::geo {

/// Static 3-d tree for nearest-neighbour queries.
class PointTree {
 public:
  explicit PointTree(std::vector<Vec3> points);
  /// Squared distance to the nearest stored point.
  double nearest_sq(const Vec3& q) const;
  std::size_t size() const noexcept { return points_.size(); }

 private:
  void build(std::size_t lo, std::size_t hi, int depth);
  void search(std::size_t lo, std::size_t hi, int depth, const Vec3& q, double& best) const;

  std::vector<Vec3> points_;
};

/// Mean over `from` of the squared distance to the nearest point of `to`.
double mean_nearest_sq(const std::vector<Vec3>& from, const std::vector<Vec3>& to);

/// Average of the two directed mean squared nearest-neighbour distances.
double chamfer_points(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

/// Samples n_points on each surface with the same seed, then chamfer_points.
/// Throws std::invalid_argument for an empty mesh or n_points == 0.
double chamfer(const Mesh& a, const Mesh& b, std::size_t n_points, std::uint64_t seed);

}  // namespace sdfedit::geo
