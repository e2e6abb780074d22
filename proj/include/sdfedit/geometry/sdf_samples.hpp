#pragma once

#include "sdfedit/geometry/mesh.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace sdfedit::geo {

struct SdfSampleSet {
  std::vector<Vec3> points;
  std::vector<double> distances;

  std::size_t size() const noexcept { return points.size(); }
};

struct SamplingConfig {
  std::size_t n_surface = 0;
  std::size_t n_uniform = 0;
  /// Near-surface points are split evenly between these isotropic noise levels.
  std::array<double, 2> noise_scales{0.012, 0.05};
  /// Uniform samples are drawn in [-bound, bound]^3.
  double bound = 1.0;
};

using DistanceFn = std::function<double(const Vec3&)>;

/// Near-surface points come from area-weighted samples of `surface` plus noise;
/// every point is labelled by `distance`. Deterministic in `seed`.
SdfSampleSet sample_sdf(const Mesh& surface, const DistanceFn& distance, const SamplingConfig& cfg,
                        std::uint64_t seed);
/// Labels with the mesh's own signed distance.
SdfSampleSet sample_sdf(const Mesh& mesh, const SamplingConfig& cfg, std::uint64_t seed);

// Binary layout (little-endian):
//   "SDFESMPL" | u32 version=1 | u64 count | count x 3 f64 points | count f64 distances
std::vector<std::uint8_t> encode_samples(const SdfSampleSet& set);
SdfSampleSet decode_samples(const std::vector<std::uint8_t>& bytes);
void save_samples(const SdfSampleSet& set, const std::filesystem::path& path);
SdfSampleSet load_samples(const std::filesystem::path& path);
/// One "x y z d" line per sample.
std::string samples_to_text(const SdfSampleSet& set);

}  // namespace sdfedit::geo
