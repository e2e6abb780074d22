#include "sdfedit/geometry/marching_cubes.hpp"

#include "mc_tables.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace sdfedit::geo {
namespace {

constexpr std::array<std::array<int, 3>, 8> kCorner = {{{0, 0, 0},
                                                        {1, 0, 0},
                                                        {1, 1, 0},
                                                        {0, 1, 0},
                                                        {0, 0, 1},
                                                        {1, 0, 1},
                                                        {1, 1, 1},
                                                        {0, 1, 1}}};

constexpr std::array<std::array<int, 2>, 12> kEdgeCorners = {{{0, 1},
                                                              {1, 2},
                                                              {2, 3},
                                                              {3, 0},
                                                              {4, 5},
                                                              {5, 6},
                                                              {6, 7},
                                                              {7, 4},
                                                              {0, 4},
                                                              {1, 5},
                                                              {2, 6},
                                                              {3, 7}}};

}  // namespace

std::vector<Vec3> grid_points(const GridSpec& spec) {
  const auto n = spec.samples_per_axis();
  std::vector<Vec3> pts;
  pts.reserve(spec.sample_count());
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) pts.push_back(spec.point(i, j, k));
  return pts;
}

ScalarGrid sample_grid(const GridSpec& spec, const std::function<double(const Vec3&)>& field) {
  ScalarGrid g{spec, {}};
  const auto pts = grid_points(spec);
  g.values.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) g.values[i] = field(pts[i]);
  return g;
}

Mesh marching_cubes(const ScalarGrid& grid, double iso) {
  const GridSpec& s = grid.spec;
  if (s.resolution < 8) throw std::invalid_argument("marching cubes needs resolution >= 8");
  if (!(s.hi > s.lo)) throw std::invalid_argument("grid bounds are empty");
  if (grid.values.size() != s.sample_count()) {
    throw std::invalid_argument("grid has " + std::to_string(grid.values.size()) +
                                " samples, expected " + std::to_string(s.sample_count()));
  }
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    if (!std::isfinite(grid.values[i])) {
      throw std::invalid_argument("non-finite field value at sample " + std::to_string(i));
    }
  }

  const std::size_t n = s.samples_per_axis();
  Mesh mesh;
  // Key: 3 * (index of the edge's lower lattice point) + axis.
  std::unordered_map<std::size_t, std::uint32_t> edge_vertex;

  auto vertex_on = [&](std::size_t i, std::size_t j, std::size_t k, int e) {
    const auto& c0 = kCorner[kEdgeCorners[e][0]];
    const auto& c1 = kCorner[kEdgeCorners[e][1]];
    std::array<std::size_t, 3> a{i + c0[0], j + c0[1], k + c0[2]};
    std::array<std::size_t, 3> b{i + c1[0], j + c1[1], k + c1[2]};
    if (s.index(b[0], b[1], b[2]) < s.index(a[0], a[1], a[2])) std::swap(a, b);
    const int axis = b[0] != a[0] ? 0 : (b[1] != a[1] ? 1 : 2);
    const std::size_t ia = s.index(a[0], a[1], a[2]);
    const std::size_t key = 3 * ia + static_cast<std::size_t>(axis);
    auto [it, fresh] = edge_vertex.try_emplace(key, 0u);
    if (fresh) {
      const double va = grid.values[ia];
      const double vb = grid.values[s.index(b[0], b[1], b[2])];
      const double t = vb != va ? (iso - va) / (vb - va) : 0.5;
      const Vec3 pa = s.point(a[0], a[1], a[2]);
      const Vec3 pb = s.point(b[0], b[1], b[2]);
      it->second = static_cast<std::uint32_t>(mesh.vertices.size());
      mesh.vertices.push_back(pa + t * (pb - pa));
    }
    return it->second;
  };

  for (std::size_t k = 0; k + 1 < n; ++k) {
    for (std::size_t j = 0; j + 1 < n; ++j) {
      for (std::size_t i = 0; i + 1 < n; ++i) {
        unsigned cube = 0;
        for (int c = 0; c < 8; ++c) {
          const double v = grid.values[s.index(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2])];
          if (v < iso) cube |= 1u << c;
        }
        if (mc::kEdgeTable[cube] == 0) continue;
        const auto& tris = mc::kTriTable[cube];
        for (int t = 0; tris[t] != -1; t += 3) {
          const auto a = vertex_on(i, j, k, tris[t]);
          const auto b = vertex_on(i, j, k, tris[t + 1]);
          const auto c = vertex_on(i, j, k, tris[t + 2]);
          // The table winds clockwise seen from the high side; flip to CCW.
          mesh.triangles.push_back({a, c, b});
        }
      }
    }
  }
  return remove_degenerate(mesh);
}

}  // namespace sdfedit::geo
