#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace sdfedit::geo {

using Vec3 = Eigen::Vector3d;
using Triangle = std::array<std::uint32_t, 3>;

/// Indexed triangle surface. Counter-clockwise winding seen from outside.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  bool empty() const noexcept { return triangles.empty(); }
};

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void grow(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void grow(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool valid() const { return (lo.array() <= hi.array()).all(); }
  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
  /// Squared distance from p to the box (0 inside).
  double squared_distance(const Vec3& p) const {
    const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(Vec3::Zero());
    return d.squaredNorm();
  }
};

/// Bounding box of the vertices referenced by triangles.
Aabb bounds(const Mesh& mesh);

/// Throws std::out_of_range naming the first triangle with a bad index.
void validate(const Mesh& mesh);

double triangle_area(const Mesh& mesh, std::size_t t);
double surface_area(const Mesh& mesh);

/// Drops zero-area triangles and unreferenced vertices.
Mesh remove_degenerate(const Mesh& mesh, double min_area = 0.0);

/// True when every undirected edge is shared by exactly two triangles.
bool is_watertight(const Mesh& mesh);

/// Component label per triangle; triangles sharing a vertex index are connected.
std::vector<std::uint32_t> connected_components(const Mesh& mesh, std::uint32_t* count = nullptr);
/// Keeps only the component with the largest surface area.
Mesh largest_component(const Mesh& mesh);

/// Center-and-scale map into the normalized frame.
struct Normalization {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;

  Vec3 to_normalized(const Vec3& p) const { return (p - center) * scale; }
  Vec3 to_original(const Vec3& p) const { return p / scale + center; }
};

/// Centers on the bbox center and scales the bbox diagonal to `diagonal`.
Normalization normalization_for(const Aabb& box, double diagonal = 1.6);
Mesh transform(const Mesh& mesh, const Normalization& n);
Mesh translated(const Mesh& mesh, const Vec3& offset);

/// Area-weighted uniform surface samples.
std::vector<Vec3> sample_surface(const Mesh& mesh, std::size_t count, std::mt19937_64& rng);

/// Axis-aligned box with outward-facing triangles (8 vertices, 12 triangles).
Mesh make_box(const Vec3& lo, const Vec3& hi);
/// Subdivided icosahedron projected onto a sphere.
Mesh make_icosphere(const Vec3& center, double radius, int subdivisions);

}  // namespace sdfedit::geo
