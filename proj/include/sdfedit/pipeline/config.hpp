#pragma once

#include "sdfedit/editor/editor.hpp"
#include "sdfedit/regressor/regressor.hpp"
#include "sdfedit/sdfnet/autodecoder.hpp"
#include "sdfedit/synthcars/dataset.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>

namespace sdfedit::pipeline {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MetricsConfig {
  std::size_t probes = 20;
  /// Shapes in the chamfer table, in training order; 0 means all.
  std::size_t chamfer_shapes = 8;
  std::size_t chamfer_points = 30000;
  std::uint64_t chamfer_seed = 1;
  std::vector<double> strengths{0.1, 0.2, 0.3};
};

/// Everything a pipeline run can be configured with. Sections mirror the
/// stages; every key is optional and unknown keys are errors.
struct RunConfig {
  cars::DatasetConfig data;
  sdf::SdfTrainConfig sdf;
  reg::RegressorConfig regressor;
  edit::EditorConfig editor;
  sdf::ReconstructOptions reconstruct;
  MetricsConfig metrics;
  std::size_t embed_dims = 2;
};

/// Defaults for every missing key; a top-level "seed" seeds every stage
/// unless the stage sets its own. Throws ConfigError.
RunConfig config_from_json(const nlohmann::json& j);
void validate(const RunConfig& config);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of one section, for hashing and sidecars.
nlohmann::json section_json(const RunConfig& c, const std::string& section);
std::string config_hash(const nlohmann::json& section);

}  // namespace sdfedit::pipeline
