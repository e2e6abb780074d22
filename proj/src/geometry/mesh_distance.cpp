#include "sdfedit/geometry/mesh_distance.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace sdfedit::geo {
namespace {

constexpr std::uint32_t kLeafSize = 4;

// Fixed, deliberately non-axis-aligned directions so rays rarely graze edges.
const std::array<Vec3, 3> kRayDirs = {Vec3(0.8506, 0.3162, 0.4200).normalized(),
                                      Vec3(-0.3321, 0.8913, 0.3087).normalized(),
                                      Vec3(0.2271, -0.4139, 0.8816).normalized()};

bool ray_hits_box(const Aabb& box, const Vec3& o, const Vec3& inv) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    double lo = (box.lo[a] - o[a]) * inv[a];
    double hi = (box.hi[a] - o[a]) * inv[a];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
    if (t0 > t1) return false;
  }
  return true;
}

// Moller-Trumbore, counting hits strictly in front of the origin.
bool ray_hits_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b,
                       const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pv = d.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-300) return false;
  const double inv = 1.0 / det;
  const Vec3 tv = o - a;
  const double u = tv.dot(pv) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 qv = tv.cross(e1);
  const double v = d.dot(qv) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  return e2.dot(qv) * inv > 0.0;
}

}  // namespace

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

MeshDistance::MeshDistance(Mesh mesh) : mesh_(std::move(mesh)) {
  validate(mesh_);
  if (mesh_.triangles.empty()) throw std::invalid_argument("mesh has no triangles");
  watertight_ = is_watertight(mesh_);
  const auto n = static_cast<std::uint32_t>(mesh_.triangles.size());
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  std::vector<Vec3> centroids(n);
  for (std::uint32_t t = 0; t < n; ++t) {
    const auto& tri = mesh_.triangles[t];
    centroids[t] = (mesh_.vertices[tri[0]] + mesh_.vertices[tri[1]] + mesh_.vertices[tri[2]]) / 3.0;
  }
  nodes_.reserve(2 * n / kLeafSize + 2);
  build(0, n, centroids);
}

std::uint32_t MeshDistance::build(std::uint32_t first, std::uint32_t count,
                                  std::vector<Vec3>& centroids) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  Aabb cbox;
  for (std::uint32_t i = first; i < first + count; ++i) {
    const auto& tri = mesh_.triangles[order_[i]];
    for (auto v : tri) box.grow(mesh_.vertices[v]);
    cbox.grow(centroids[order_[i]]);
  }
  nodes_[id].box = box;
  if (count <= kLeafSize) {
    nodes_[id].first = first;
    nodes_[id].count = count;
    return id;
  }
  int axis = 0;
  cbox.extent().maxCoeff(&axis);
  const std::uint32_t mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return centroids[a][axis] < centroids[b][axis];
                   });
  const auto l = build(first, mid - first, centroids);
  const auto r = build(mid, first + count - mid, centroids);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

void MeshDistance::closest(const Vec3& p, double& best_sq, Vec3& best,
                           std::uint32_t& best_tri) const {
  std::vector<std::uint32_t> stack;
  stack.reserve(64);
  stack.push_back(0);
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.box.squared_distance(p) >= best_sq) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const auto& tri = mesh_.triangles[order_[i]];
        const Vec3 q = closest_point_on_triangle(p, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]],
                                                 mesh_.vertices[tri[2]]);
        const double d = (q - p).squaredNorm();
        if (d < best_sq) {
          best_sq = d;
          best = q;
          best_tri = order_[i];
        }
      }
      continue;
    }
    const double dl = nodes_[node.left].box.squared_distance(p);
    const double dr = nodes_[node.right].box.squared_distance(p);
    // Push the farther child first so the nearer one is explored first.
    if (dl < dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
}

int MeshDistance::crossings(const Vec3& origin, const Vec3& dir) const {
  const Vec3 inv = dir.cwiseInverse();
  int hits = 0;
  std::vector<std::uint32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (!ray_hits_box(node.box, origin, inv)) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const auto& tri = mesh_.triangles[order_[i]];
        if (ray_hits_triangle(origin, dir, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]],
                              mesh_.vertices[tri[2]])) {
          ++hits;
        }
      }
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  return hits;
}

bool MeshDistance::inside(const Vec3& p, bool* unanimous) const {
  int votes = 0;
  for (const auto& d : kRayDirs) votes += crossings(p, d) % 2;
  if (unanimous) *unanimous = votes == 0 || votes == 3;
  return votes >= 2;
}

double MeshDistance::unsigned_distance(const Vec3& p) const {
  double best_sq = std::numeric_limits<double>::infinity();
  Vec3 best;
  std::uint32_t tri = 0;
  closest(p, best_sq, best, tri);
  return std::sqrt(best_sq);
}

DistanceQuery MeshDistance::query(const Vec3& p) const {
  DistanceQuery q;
  double best_sq = std::numeric_limits<double>::infinity();
  closest(p, best_sq, q.closest, q.triangle);
  const double d = std::sqrt(best_sq);
  bool unanimous = true;
  const bool in = d > 0.0 && inside(p, &unanimous);
  q.distance = in ? -d : d;
  q.sign_reliable = watertight_ && unanimous;
  return q;
}

double signed_distance(const Mesh& mesh, const Vec3& p) { return MeshDistance(mesh).signed_distance(p); }

}  // namespace sdfedit::geo
