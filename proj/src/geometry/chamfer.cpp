#include "sdfedit/geometry/chamfer.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>

namespace sdfedit::geo {

// Implicit balanced tree: the median of [lo, hi) sits at the midpoint and
// splits on axis depth % 3.
PointTree::PointTree(std::vector<Vec3> points) : points_(std::move(points)) {
  build(0, points_.size(), 0);
}

void PointTree::build(std::size_t lo, std::size_t hi, int depth) {
  if (hi - lo <= 1) return;
  const int axis = depth % 3;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(points_.begin() + static_cast<std::ptrdiff_t>(lo),
                   points_.begin() + static_cast<std::ptrdiff_t>(mid),
                   points_.begin() + static_cast<std::ptrdiff_t>(hi),
                   [axis](const Vec3& a, const Vec3& b) { return a[axis] < b[axis]; });
  build(lo, mid, depth + 1);
  build(mid + 1, hi, depth + 1);
}

void PointTree::search(std::size_t lo, std::size_t hi, int depth, const Vec3& q,
                       double& best) const {
  if (lo >= hi) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  const Vec3& p = points_[mid];
  best = std::min(best, (p - q).squaredNorm());
  const int axis = depth % 3;
  const double diff = q[axis] - p[axis];
  if (diff < 0) {
    search(lo, mid, depth + 1, q, best);
    if (diff * diff < best) search(mid + 1, hi, depth + 1, q, best);
  } else {
    search(mid + 1, hi, depth + 1, q, best);
    if (diff * diff < best) search(lo, mid, depth + 1, q, best);
  }
}

double PointTree::nearest_sq(const Vec3& q) const {
  double best = std::numeric_limits<double>::infinity();
  search(0, points_.size(), 0, q, best);
  return best;
}

double mean_nearest_sq(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
  if (from.empty() || to.empty()) throw std::invalid_argument("chamfer needs non-empty point sets");
  const PointTree tree(to);
  double total = 0.0;
  for (const auto& p : from) total += tree.nearest_sq(p);
  return total / static_cast<double>(from.size());
}

double chamfer_points(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  return 0.5 * (mean_nearest_sq(a, b) + mean_nearest_sq(b, a));
}

double chamfer(const Mesh& a, const Mesh& b, std::size_t n_points, std::uint64_t seed) {
  if (a.empty() || b.empty()) throw std::invalid_argument("chamfer needs non-empty meshes");
  if (n_points == 0) throw std::invalid_argument("chamfer needs n_points > 0");
  std::mt19937_64 ra(seed);
  std::mt19937_64 rb(seed);
  return chamfer_points(sample_surface(a, n_points, ra), sample_surface(b, n_points, rb));
}

}  // namespace sdfedit::geo
