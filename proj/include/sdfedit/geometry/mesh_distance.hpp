#pragma once

#include "sdfedit/geometry/mesh.hpp"

#include <cstdint>
#include <vector>

namespace sdfedit::geo {

struct DistanceQuery {
  double distance = 0.0;  // signed: negative inside
  Vec3 closest = Vec3::Zero();
  std::uint32_t triangle = 0;
  /// False when the mesh is not watertight or the three parity rays disagree.
  bool sign_reliable = true;
};

/// Closest-point and inside/outside queries against a fixed mesh.
/// Immutable after construction, so concurrent queries are safe.
class MeshDistance {
 public:
  explicit MeshDistance(Mesh mesh);

  DistanceQuery query(const Vec3& p) const;
  double signed_distance(const Vec3& p) const { return query(p).distance; }
  double unsigned_distance(const Vec3& p) const;
  /// Majority vote over three fixed ray directions.
  bool inside(const Vec3& p, bool* unanimous = nullptr) const;

  bool watertight() const noexcept { return watertight_; }
  const Mesh& mesh() const noexcept { return mesh_; }

 private:
  struct Node {
    Aabb box;
    std::uint32_t left = 0, right = 0;  // children when count == 0
    std::uint32_t first = 0, count = 0;
  };

  std::uint32_t build(std::uint32_t first, std::uint32_t count, std::vector<Vec3>& centroids);
  void closest(const Vec3& p, double& best_sq, Vec3& best, std::uint32_t& best_tri) const;
  int crossings(const Vec3& origin, const Vec3& dir) const;

  Mesh mesh_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  bool watertight_ = false;
};

/// One-shot convenience; builds the acceleration structure per call.
double signed_distance(const Mesh& mesh, const Vec3& p);

/// Closest point to p on triangle abc (Ericson's region test).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace sdfedit::geo
