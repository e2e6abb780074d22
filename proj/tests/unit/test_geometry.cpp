#include <doctest.h>

#include "sdfedit/common/io.hpp"
#include "sdfedit/geometry/chamfer.hpp"
#include "sdfedit/geometry/marching_cubes.hpp"
#include "sdfedit/geometry/measure.hpp"
#include "sdfedit/geometry/mesh_distance.hpp"
#include "sdfedit/geometry/obj_io.hpp"
#include "sdfedit/geometry/sdf_samples.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <random>

using namespace sdfedit;
using namespace sdfedit::geo;

namespace {

Mesh unit_cube() { return make_box(Vec3::Constant(-0.5), Vec3::Constant(0.5)); }

// Exact distance to the axis-aligned box [-h, h]^3.
double box_sdf(const Vec3& p, double h) {
  const Vec3 q = p.cwiseAbs() - Vec3::Constant(h);
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

double signed_volume(const Mesh& m) {
  double v = 0.0;
  for (const auto& t : m.triangles) {
    v += m.vertices[t[0]].dot(m.vertices[t[1]].cross(m.vertices[t[2]])) / 6.0;
  }
  return v;
}

std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use(const Mesh& m) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> use;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) ++use[std::minmax(t[k], t[(k + 1) % 3])];
  }
  return use;
}

double brute_mean_nearest_sq(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
  double total = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, (p - q).squaredNorm());
    total += best;
  }
  return total / static_cast<double>(from.size());
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "sdfedit_test_geometry";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("mesh: box primitive is closed and outward facing") {
  const Mesh m = unit_cube();
  CHECK(m.vertices.size() == 8);
  CHECK(m.triangles.size() == 12);
  CHECK(is_watertight(m));
  CHECK(signed_volume(m) == doctest::Approx(1.0));
}

TEST_CASE("mesh: icosphere is closed, outward facing and on the sphere") {
  const Mesh m = make_icosphere(Vec3(0.1, 0.2, 0.3), 0.7, 3);
  CHECK(is_watertight(m));
  CHECK(signed_volume(m) > 0.0);
  for (const auto& v : m.vertices) CHECK((v - Vec3(0.1, 0.2, 0.3)).norm() == doctest::Approx(0.7));
}

TEST_CASE("mesh: remove_degenerate drops zero-area triangles") {
  Mesh m = unit_cube();
  m.vertices.push_back(Vec3(5, 5, 5));
  m.triangles.push_back({0, 0, 1});
  m.triangles.push_back({0, 1, 1});
  const Mesh c = remove_degenerate(m);
  CHECK(c.triangles.size() == 12);
  CHECK(c.vertices.size() == 8);
  CHECK(is_watertight(c));
}

TEST_CASE("mesh: normalization centers and scales the bbox diagonal") {
  const Mesh m = make_box(Vec3(1, 2, 3), Vec3(3, 3, 3.8));
  const auto n = normalization_for(bounds(m), 1.6);
  const Aabb b = bounds(transform(m, n));
  CHECK(b.center().norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b.extent().norm() == doctest::Approx(1.6));
  const Vec3 p(2.5, 2.1, 3.3);
  CHECK((n.to_original(n.to_normalized(p)) - p).norm() < 1e-12);
}

TEST_CASE("obj: save then load preserves a unit cube") {
  const Mesh m = unit_cube();
  const auto path = scratch("cube.obj");
  save_mesh(m, path);
  const Mesh r = load_mesh(path);
  REQUIRE(r.vertices.size() == 8);
  REQUIRE(r.triangles.size() == 12);
  for (std::size_t i = 0; i < 8; ++i) CHECK((r.vertices[i] - m.vertices[i]).norm() < 1e-6);
  CHECK(r.triangles == m.triangles);
}

TEST_CASE("obj: random mesh round-trips exactly") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 3.0);
  Mesh m = make_icosphere(Vec3::Zero(), 1.0, 1);
  for (auto& v : m.vertices) v = Vec3(n(rng), n(rng), n(rng));
  const Mesh r = parse_obj(format_obj(m));
  CHECK(r.triangles == m.triangles);
  for (std::size_t i = 0; i < m.vertices.size(); ++i) CHECK(r.vertices[i] == m.vertices[i]);
}

TEST_CASE("obj: out-of-range face index names the line") {
  const std::string text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\nf 1 2 9\n";
  try {
    parse_obj(text);
    FAIL("expected an error");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 5") != std::string::npos);
    CHECK(msg.find("out of range") != std::string::npos);
  }
}

TEST_CASE("obj: malformed face index is rejected") {
  CHECK_THROWS_WITH_AS(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 x 3\n"),
                       doctest::Contains("line 4"), FormatError);
}

TEST_CASE("obj: empty file reports no geometry") {
  CHECK_THROWS_WITH_AS(parse_obj(""), "no geometry", FormatError);
  CHECK_THROWS_WITH_AS(parse_obj("# only a comment\n"), "no geometry", FormatError);
}

TEST_CASE("obj: quads are fan-triangulated and other records warned about") {
  std::vector<std::string> warnings;
  const Mesh m = parse_obj(
      "o thing\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1 4/4/1\n", &warnings);
  CHECK(m.triangles.size() == 2);
  CHECK(warnings.size() == 3);
}

TEST_CASE("obj: negative indices are relative") {
  const Mesh m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n");
  CHECK(m.triangles.at(0) == Triangle{0, 1, 2});
}

TEST_CASE("signed_distance: analytic unit cube values") {
  const Mesh cube = unit_cube();
  CHECK(std::abs(signed_distance(cube, Vec3(0, 0, 0)) + 0.5) < 1e-6);
  CHECK(std::abs(signed_distance(cube, Vec3(1, 0, 0)) - 0.5) < 1e-6);
  CHECK(std::abs(signed_distance(cube, Vec3(1, 1, 1)) - std::sqrt(0.75)) < 1e-6);
}

TEST_CASE("signed_distance: matches the exact box distance at random points") {
  const MeshDistance md(unit_cube());
  CHECK(md.watertight());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const auto q = md.query(p);
    CHECK(q.sign_reliable);
    CHECK(std::abs(q.distance - box_sdf(p, 0.5)) < 1e-9);
  }
}

TEST_CASE("signed_distance: icosphere agrees with the sphere up to tessellation") {
  // Chord sag of a 4x subdivided icosphere of radius 0.5 is well under 1e-3.
  const MeshDistance md(make_icosphere(Vec3::Zero(), 0.5, 4));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    CHECK(std::abs(md.signed_distance(p) - (p.norm() - 0.5)) < 2e-3);
  }
}

TEST_CASE("signed_distance: is 1-Lipschitz") {
  const MeshDistance md(make_icosphere(Vec3(0.1, 0, 0), 0.6, 2));
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const Vec3 q(u(rng), u(rng), u(rng));
    CHECK(std::abs(md.signed_distance(p) - md.signed_distance(q)) <= (p - q).norm() + 1e-9);
  }
}

TEST_CASE("signed_distance: open mesh flags its sign as unreliable") {
  Mesh open = unit_cube();
  open.triangles.pop_back();
  const MeshDistance md(open);
  CHECK_FALSE(md.watertight());
  CHECK_FALSE(md.query(Vec3(0.1, 0.0, 0.0)).sign_reliable);
}

TEST_CASE("closest_point_on_triangle: every region against a dense scan") {
  const Vec3 a(0, 0, 0), b(1, 0, 0.2), c(0.3, 0.9, -0.1);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const double got = (closest_point_on_triangle(p, a, b, c) - p).norm();
    double best = std::numeric_limits<double>::infinity();
    const int steps = 200;
    for (int s = 0; s <= steps; ++s) {
      for (int t = 0; s + t <= steps; ++t) {
        const Vec3 q = a + (b - a) * (double(s) / steps) + (c - a) * (double(t) / steps);
        best = std::min(best, (q - p).norm());
      }
    }
    CHECK(got <= best + 1e-12);
    CHECK(got >= best - 1e-2);
  }
}

TEST_CASE("sample_sdf: sphere mesh, uniform samples carry the analytic sign") {
  const Mesh sphere = make_icosphere(Vec3::Zero(), 0.5, 4);
  SamplingConfig cfg;
  cfg.n_uniform = 2000;
  const auto set = sample_sdf(sphere, cfg, 7);
  REQUIRE(set.size() == 2000);
  int disagreements = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double r = set.points[i].norm() - 0.5;
    // Only the thin shell between the facets and the true sphere may differ.
    if (std::abs(r) > 2e-3 && (r < 0) != (set.distances[i] < 0)) ++disagreements;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("sample_sdf: fixed seed is deterministic and seeds differ") {
  const Mesh sphere = make_icosphere(Vec3::Zero(), 0.5, 2);
  SamplingConfig cfg;
  cfg.n_surface = 300;
  cfg.n_uniform = 50;
  const auto a = encode_samples(sample_sdf(sphere, cfg, 42));
  const auto b = encode_samples(sample_sdf(sphere, cfg, 42));
  const auto c = encode_samples(sample_sdf(sphere, cfg, 43));
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("sample_sdf: near-surface distances concentrate within 3x the larger noise") {
  const Mesh sphere = make_icosphere(Vec3::Zero(), 0.5, 3);
  SamplingConfig cfg;
  cfg.n_surface = 4000;
  const auto set = sample_sdf(sphere, cfg, 1);
  const double limit = 3.0 * std::max(cfg.noise_scales[0], cfg.noise_scales[1]);
  const auto within = std::count_if(set.distances.begin(), set.distances.end(),
                                    [&](double d) { return std::abs(d) < limit; });
  CHECK(double(within) / double(set.size()) >= 0.99);
}

TEST_CASE("sample_sdf: every emitted sign agrees with signed_distance") {
  const Mesh cube = unit_cube();
  const MeshDistance md(cube);
  SamplingConfig cfg;
  cfg.n_surface = 500;
  cfg.n_uniform = 500;
  const auto set = sample_sdf(cube, cfg, 3);
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK((set.distances[i] < 0) == (md.signed_distance(set.points[i]) < 0));
  }
}

TEST_CASE("sample_sdf: zero counts give an empty set") {
  const auto set = sample_sdf(unit_cube(), SamplingConfig{}, 1);
  CHECK(set.size() == 0);
  CHECK(set.distances.empty());
}

TEST_CASE("samples: binary round trip and corruption") {
  const Mesh cube = unit_cube();
  SamplingConfig cfg;
  cfg.n_surface = 40;
  cfg.n_uniform = 10;
  const auto set = sample_sdf(cube, cfg, 2);
  const auto path = scratch("s.bin");
  save_samples(set, path);
  const auto r = load_samples(path);
  CHECK(encode_samples(r) == encode_samples(set));
  auto bytes = encode_samples(set);
  CHECK(bytes.size() == 8 + 4 + 8 + 50 * 32);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_samples(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_samples(trailing), FormatError);
  bytes[0] = 'X';
  CHECK_THROWS_AS(decode_samples(bytes), FormatError);
  const auto text = samples_to_text(set);
  CHECK(std::count(text.begin(), text.end(), '\n') == 50);
}

TEST_CASE("marching_cubes: everywhere-positive field gives an empty mesh") {
  const auto grid = sample_grid(GridSpec{16}, [](const Vec3&) { return 1.0; });
  CHECK(marching_cubes(grid).empty());
}

TEST_CASE("marching_cubes: r=0.5 sphere at 64^3") {
  const GridSpec spec{64};
  CHECK(spec.cell_diagonal() == doctest::Approx(0.0541).epsilon(1e-3));
  const auto grid = sample_grid(spec, [](const Vec3& p) { return p.norm() - 0.5; });
  const Mesh m = marching_cubes(grid);
  REQUIRE_FALSE(m.empty());
  double worst = 0.0;
  for (const auto& v : m.vertices) worst = std::max(worst, std::abs(v.norm() - 0.5));
  CHECK(worst <= spec.cell_diagonal());
  for (const auto& [edge, n] : edge_use(m)) {
    if (n != 2) FAIL("edge shared by " << n << " triangles");
  }
  CHECK(signed_volume(m) == doctest::Approx(4.0 / 3.0 * M_PI * 0.125).epsilon(0.01));
}

TEST_CASE("marching_cubes: normals point along increasing field") {
  const auto grid = sample_grid(GridSpec{24}, [](const Vec3& p) { return (p - Vec3(0.1, -0.2, 0.05)).norm() - 0.6; });
  const Mesh m = marching_cubes(grid);
  for (const auto& t : m.triangles) {
    const Vec3& a = m.vertices[t[0]];
    const Vec3 n = (m.vertices[t[1]] - a).cross(m.vertices[t[2]] - a);
    const Vec3 c = (a + m.vertices[t[1]] + m.vertices[t[2]]) / 3.0;
    CHECK(n.dot(c - Vec3(0.1, -0.2, 0.05)) > 0.0);
  }
}

TEST_CASE("marching_cubes: plane field p_z gives one sheet with +z normals") {
  const GridSpec spec{16};
  const auto grid = sample_grid(spec, [](const Vec3& p) { return p.z() - 0.013; });
  const Mesh m = marching_cubes(grid);
  REQUIRE_FALSE(m.empty());
  for (const auto& v : m.vertices) CHECK(std::abs(v.z() - 0.013) < 1e-12);
  double area = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    const Vec3& a = m.vertices[tri[0]];
    const Vec3 n = (m.vertices[tri[1]] - a).cross(m.vertices[tri[2]] - a);
    CHECK(n.normalized().z() == doctest::Approx(1.0));
    area += triangle_area(m, t);
  }
  CHECK(area == doctest::Approx(4.0));
}

TEST_CASE("marching_cubes: closed surface for random blobs") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec3 c1(u(rng), u(rng), u(rng));
    const Vec3 c2(u(rng), u(rng), u(rng));
    const auto grid = sample_grid(GridSpec{32}, [&](const Vec3& p) {
      return std::min((p - c1).norm() - 0.3, box_sdf(p - c2, 0.2));
    });
    const Mesh m = marching_cubes(grid);
    CHECK(is_watertight(m));
    CHECK(signed_volume(m) > 0.0);
  }
}

TEST_CASE("marching_cubes: rejects bad grids") {
  CHECK_THROWS_AS(marching_cubes(sample_grid(GridSpec{4}, [](const Vec3&) { return 1.0; })),
                  std::invalid_argument);
  auto grid = sample_grid(GridSpec{8}, [](const Vec3& p) { return p.norm() - 0.5; });
  grid.values[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(marching_cubes(grid), std::invalid_argument);
  grid.values.pop_back();
  CHECK_THROWS_AS(marching_cubes(grid), std::invalid_argument);
}

TEST_CASE("chamfer: identical meshes with one seed give zero") {
  const Mesh s = make_icosphere(Vec3::Zero(), 1.0, 2);
  CHECK(chamfer(s, s, 500, 4) == 0.0);
}

TEST_CASE("chamfer: offset spheres match a quadratic-scan oracle") {
  const Mesh a = make_icosphere(Vec3::Zero(), 1.0, 3);
  const Mesh b = make_icosphere(Vec3(0.1, 0, 0), 1.0, 3);
  const std::size_t n = 800;
  std::mt19937_64 ra(12), rb(12);
  const auto pa = sample_surface(a, n, ra);
  const auto pb = sample_surface(b, n, rb);
  const double oracle = 0.5 * (brute_mean_nearest_sq(pa, pb) + brute_mean_nearest_sq(pb, pa));
  CHECK(chamfer(a, b, n, 12) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(chamfer(a, b, n, 12) > 0.0);
}

TEST_CASE("chamfer: symmetric and non-negative") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 5; ++i) {
    const Mesh a = make_icosphere(Vec3(u(rng), u(rng), u(rng)), 0.5 + 0.3 * u(rng), 2);
    const Mesh b = make_box(Vec3(u(rng), -0.6, -0.6), Vec3(0.7, 0.6 + u(rng), 0.6));
    const double ab = chamfer(a, b, 300, 5);
    CHECK(ab == chamfer(b, a, 300, 5));
    CHECK(ab >= 0.0);
  }
}

TEST_CASE("chamfer: kd-tree nearest matches a scan") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Vec3> pts(1000);
  for (auto& p : pts) p = Vec3(n(rng), n(rng), n(rng));
  const PointTree tree(pts);
  for (int i = 0; i < 300; ++i) {
    const Vec3 q(n(rng), n(rng), n(rng));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) best = std::min(best, (p - q).squaredNorm());
    CHECK(tree.nearest_sq(q) == best);
  }
}

TEST_CASE("chamfer: empty input is rejected") {
  CHECK_THROWS_AS(chamfer(Mesh{}, unit_cube(), 10, 1), std::invalid_argument);
}

TEST_CASE("measure_attributes: box extents and translation invariance") {
  const Mesh box = make_box(Vec3(-1.0, -0.5, 0.0), Vec3(1.0, 0.5, 0.8));
  const auto m = measure_attributes(box);
  CHECK(m.length == doctest::Approx(2.0));
  CHECK(m.width == doctest::Approx(1.0));
  CHECK(m.height == doctest::Approx(0.8));
  const auto t = measure_attributes(translated(box, Vec3(3.0, -7.0, 11.0)));
  CHECK(t.length == doctest::Approx(m.length).epsilon(1e-12));
  CHECK(t.width == doctest::Approx(m.width).epsilon(1e-12));
  CHECK(t.height == doctest::Approx(m.height).epsilon(1e-12));
  CHECK_THROWS_AS(measure_attributes(Mesh{}), std::invalid_argument);
}
