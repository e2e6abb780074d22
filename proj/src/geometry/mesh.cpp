#include "sdfedit/geometry/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace sdfedit::geo {

Aabb bounds(const Mesh& mesh) {
  Aabb box;
  for (const auto& t : mesh.triangles) {
    for (auto i : t) box.grow(mesh.vertices[i]);
  }
  return box;
}

void validate(const Mesh& mesh) {
  const auto n = mesh.vertices.size();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (auto i : mesh.triangles[t]) {
      if (i >= n) {
        throw std::out_of_range("triangle " + std::to_string(t) + " references vertex " +
                                std::to_string(i) + " of " + std::to_string(n));
      }
    }
  }
}

double triangle_area(const Mesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Vec3& a = mesh.vertices[tri[0]];
  const Vec3& b = mesh.vertices[tri[1]];
  const Vec3& c = mesh.vertices[tri[2]];
  return 0.5 * (b - a).cross(c - a).norm();
}

double surface_area(const Mesh& mesh) {
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) total += triangle_area(mesh, t);
  return total;
}

Mesh remove_degenerate(const Mesh& mesh, double min_area) {
  Mesh out;
  std::vector<std::int64_t> remap(mesh.vertices.size(), -1);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;
    if (!(triangle_area(mesh, t) > min_area)) continue;
    Triangle nt;
    for (int k = 0; k < 3; ++k) {
      auto& r = remap[tri[k]];
      if (r < 0) {
        r = static_cast<std::int64_t>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[tri[k]]);
      }
      nt[k] = static_cast<std::uint32_t>(r);
    }
    out.triangles.push_back(nt);
  }
  return out;
}

bool is_watertight(const Mesh& mesh) {
  if (mesh.triangles.empty()) return false;
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(mesh.triangles.size() * 3);
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      std::uint64_t a = t[k];
      std::uint64_t b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++count[(a << 32) | b];
    }
  }
  return std::all_of(count.begin(), count.end(), [](const auto& kv) { return kv.second == 2; });
}

std::vector<std::uint32_t> connected_components(const Mesh& mesh, std::uint32_t* count) {
  std::vector<std::uint32_t> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& t : mesh.triangles) {
    parent[find(t[1])] = find(t[0]);
    parent[find(t[2])] = find(t[0]);
  }
  std::unordered_map<std::uint32_t, std::uint32_t> label;
  std::vector<std::uint32_t> out;
  out.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const auto root = find(t[0]);
    const auto it = label.try_emplace(root, static_cast<std::uint32_t>(label.size())).first;
    out.push_back(it->second);
  }
  if (count) *count = static_cast<std::uint32_t>(label.size());
  return out;
}

Mesh largest_component(const Mesh& mesh) {
  std::uint32_t n = 0;
  const auto labels = connected_components(mesh, &n);
  if (n <= 1) return mesh;
  std::vector<double> area(n, 0.0);
  for (std::size_t t = 0; t < labels.size(); ++t) area[labels[t]] += triangle_area(mesh, t);
  const auto keep = static_cast<std::uint32_t>(std::max_element(area.begin(), area.end()) - area.begin());
  Mesh part;
  part.vertices = mesh.vertices;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] == keep) part.triangles.push_back(mesh.triangles[t]);
  }
  return remove_degenerate(part);
}

Normalization normalization_for(const Aabb& box, double diagonal) {
  Normalization n;
  n.center = box.center();
  const double d = box.extent().norm();
  n.scale = d > 0 ? diagonal / d : 1.0;
  return n;
}

Mesh transform(const Mesh& mesh, const Normalization& n) {
  Mesh out = mesh;
  for (auto& v : out.vertices) v = n.to_normalized(v);
  return out;
}

Mesh translated(const Mesh& mesh, const Vec3& offset) {
  Mesh out = mesh;
  for (auto& v : out.vertices) v += offset;
  return out;
}

std::vector<Vec3> sample_surface(const Mesh& mesh, std::size_t count, std::mt19937_64& rng) {
  std::vector<Vec3> out;
  if (count == 0 || mesh.triangles.empty()) return out;
  std::vector<double> cdf(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += triangle_area(mesh, t);
    cdf[t] = total;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double r = u(rng) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
    const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()),
                                                cdf.size() - 1);
    double s = u(rng);
    double q = u(rng);
    if (s + q > 1.0) {
      s = 1.0 - s;
      q = 1.0 - q;
    }
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    out.push_back(a + s * (mesh.vertices[tri[1]] - a) + q * (mesh.vertices[tri[2]] - a));
  }
  return out;
}

Mesh make_box(const Vec3& lo, const Vec3& hi) {
  Mesh m;
  for (int k = 0; k < 8; ++k) {
    m.vertices.emplace_back((k & 1) ? hi.x() : lo.x(), (k & 2) ? hi.y() : lo.y(),
                            (k & 4) ? hi.z() : lo.z());
  }
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                 {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

Mesh make_icosphere(const Vec3& center, double radius, int subdivisions) {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0},
                         {0, -1, p}, {0, 1, p}, {0, -1, -p}, {0, 1, -p},
                         {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
  for (auto& x : v) x.normalize();
  std::vector<Triangle> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const auto id = static_cast<std::uint32_t>(v.size() - 1);
      mid.emplace(key, id);
      return id;
    };
    std::vector<Triangle> next;
    for (const auto& t : f) {
      const auto a = midpoint(t[0], t[1]);
      const auto b = midpoint(t[1], t[2]);
      const auto c = midpoint(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  Mesh m;
  for (const auto& x : v) m.vertices.push_back(center + radius * x);
  m.triangles = std::move(f);
  return m;
}

}  // namespace sdfedit::geo
