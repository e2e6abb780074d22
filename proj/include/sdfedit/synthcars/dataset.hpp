#pragma once

#include "sdfedit/geometry/sdf_samples.hpp"
#include "sdfedit/synthcars/car.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sdfedit::cars {

struct DatasetConfig {
  std::size_t count = 8;
  std::uint64_t seed = 7;
  std::vector<ParamRange> ranges = default_ranges();
  std::vector<std::string> attribute_names = default_attribute_names();
  geo::SamplingConfig sampling{7200, 800, {0.012, 0.05}, 1.0};
  /// Marching-cubes cells per axis for the reference meshes.
  std::size_t mesh_resolution = 64;
};

struct ShapeRecord {
  std::string id;
  CarParams params;
  std::vector<double> attributes;
  std::string samples_path;  // relative to the manifest directory
  std::string mesh_path;
};

/// Manifest schema "sdfedit.dataset", version 1. See README for the JSON layout.
struct DatasetManifest {
  std::uint64_t seed = 0;
  std::vector<std::string> attribute_names;
  std::vector<ParamRange> ranges;
  /// Original metres -> normalized units.
  double scale = 1.0;
  geo::SamplingConfig sampling;
  std::size_t mesh_resolution = 64;
  std::vector<ShapeRecord> shapes;

  const ShapeRecord* find(const std::string& id) const;
};

std::string manifest_to_json(const DatasetManifest& m);
/// Throws FormatError on schema violations (unknown schema or version,
/// duplicate ids, attribute count mismatch, labels outside [0, 1]).
DatasetManifest manifest_from_json(const std::string& text);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Writes shapes/<id>.obj, shapes/<id>.samples and manifest.json under out_dir.
DatasetManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir);

/// Reference mesh of one car in the normalized frame.
geo::Mesh car_mesh(const CarParams& params, double scale, std::size_t resolution);

}  // namespace sdfedit::cars
