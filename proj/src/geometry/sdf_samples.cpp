#include "sdfedit/geometry/sdf_samples.hpp"

#include "sdfedit/common/io.hpp"
#include "sdfedit/geometry/mesh_distance.hpp"

#include <cstdio>
#include <string_view>
#include <random>
#include <stdexcept>

namespace sdfedit::geo {
namespace {

constexpr std::string_view kMagic = "SDFESMPL";
constexpr std::uint32_t kVersion = 1;

}  // namespace

SdfSampleSet sample_sdf(const Mesh& surface, const DistanceFn& distance, const SamplingConfig& cfg,
                        std::uint64_t seed) {
  SdfSampleSet set;
  std::mt19937_64 rng(seed);
  if (cfg.n_surface > 0) {
    if (surface.empty()) throw std::invalid_argument("near-surface sampling needs a non-empty mesh");
    const auto base = sample_surface(surface, cfg.n_surface, rng);
    for (std::size_t i = 0; i < base.size(); ++i) {
      std::normal_distribution<double> noise(0.0, cfg.noise_scales[i % 2]);
      const Vec3 offset(noise(rng), noise(rng), noise(rng));
      set.points.push_back(base[i] + offset);
    }
  }
  std::uniform_real_distribution<double> u(-cfg.bound, cfg.bound);
  for (std::size_t i = 0; i < cfg.n_uniform; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    const double z = u(rng);
    set.points.emplace_back(x, y, z);
  }
  set.distances.reserve(set.points.size());
  for (const auto& p : set.points) set.distances.push_back(distance(p));
  return set;
}

SdfSampleSet sample_sdf(const Mesh& mesh, const SamplingConfig& cfg, std::uint64_t seed) {
  const MeshDistance md(mesh);
  return sample_sdf(mesh, [&](const Vec3& p) { return md.signed_distance(p); }, cfg, seed);
}

std::vector<std::uint8_t> encode_samples(const SdfSampleSet& set) {
  if (set.points.size() != set.distances.size()) {
    throw std::invalid_argument("sample set has mismatched point and distance counts");
  }
  ByteWriter w;
  w.raw(kMagic);
  w.u32(kVersion);
  w.u64(set.points.size());
  for (const auto& p : set.points) {
    w.f64(p.x());
    w.f64(p.y());
    w.f64(p.z());
  }
  for (double d : set.distances) w.f64(d);
  return w.take();
}

SdfSampleSet decode_samples(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "sample file");
  if (r.raw(kMagic.size()) != kMagic) throw FormatError("not a sample file");
  const auto version = r.u32();
  if (version != kVersion) throw FormatError("unsupported sample file version " + std::to_string(version));
  const auto count = r.u64();
  if (count > (bytes.size() - r.offset()) / 32) throw FormatError("sample count exceeds file size");
  SdfSampleSet set;
  set.points.resize(count);
  set.distances.resize(count);
  for (auto& p : set.points) {
    const double x = r.f64();
    const double y = r.f64();
    const double z = r.f64();
    p = Vec3(x, y, z);
  }
  for (auto& d : set.distances) d = r.f64();
  if (!r.at_end()) throw FormatError("trailing bytes after sample data");
  return set;
}

void save_samples(const SdfSampleSet& set, const std::filesystem::path& path) {
  atomic_write(path, encode_samples(set));
}

SdfSampleSet load_samples(const std::filesystem::path& path) { return decode_samples(read_bytes(path)); }

std::string samples_to_text(const SdfSampleSet& set) {
  std::string out;
  char buf[160];
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& p = set.points[i];
    const int n = std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", p.x(), p.y(), p.z(),
                                set.distances[i]);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

}  // namespace sdfedit::geo
