#include "sdfedit/synthcars/dataset.hpp"

#include "sdfedit/common/io.hpp"
#include "sdfedit/geometry/marching_cubes.hpp"
#include "sdfedit/geometry/obj_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <set>

namespace sdfedit::cars {
namespace {

using nlohmann::json;

constexpr const char* kSchema = "sdfedit.dataset";
constexpr int kVersion = 1;

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("manifest is missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest field '") + key + "': " + e.what());
  }
}

}  // namespace

const ShapeRecord* DatasetManifest::find(const std::string& id) const {
  for (const auto& s : shapes) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["schema"] = kSchema;
  j["version"] = kVersion;
  j["seed"] = m.seed;
  j["attribute_names"] = m.attribute_names;
  json ranges = json::array();
  for (const auto& r : m.ranges) ranges.push_back({{"name", r.name}, {"min", r.min}, {"max", r.max}});
  j["param_ranges"] = ranges;
  j["normalization"] = {{"scale", m.scale}, {"center", "bbox"}};
  j["sampling"] = {{"n_surface", m.sampling.n_surface},
                   {"n_uniform", m.sampling.n_uniform},
                   {"noise_scales", m.sampling.noise_scales},
                   {"bound", m.sampling.bound}};
  j["mesh_resolution"] = m.mesh_resolution;
  json shapes = json::array();
  for (const auto& s : m.shapes) {
    json params = json::object();
    for (std::size_t i = 0; i < kParamCount; ++i) params[param_names()[i]] = s.params.values[i];
    shapes.push_back({{"id", s.id},
                      {"params", params},
                      {"attributes", s.attributes},
                      {"samples", s.samples_path},
                      {"mesh", s.mesh_path}});
  }
  j["shapes"] = shapes;
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (field<std::string>(j, "schema") != kSchema) throw FormatError("not a dataset manifest");
  if (field<int>(j, "version") != kVersion) throw FormatError("unsupported manifest version");
  DatasetManifest m;
  m.seed = field<std::uint64_t>(j, "seed");
  m.attribute_names = field<std::vector<std::string>>(j, "attribute_names");
  for (const auto& r : field<json>(j, "param_ranges")) {
    m.ranges.push_back({field<std::string>(r, "name"), field<double>(r, "min"), field<double>(r, "max")});
  }
  m.scale = field<double>(field<json>(j, "normalization"), "scale");
  const auto s = field<json>(j, "sampling");
  m.sampling.n_surface = field<std::size_t>(s, "n_surface");
  m.sampling.n_uniform = field<std::size_t>(s, "n_uniform");
  m.sampling.noise_scales = field<std::array<double, 2>>(s, "noise_scales");
  m.sampling.bound = field<double>(s, "bound");
  m.mesh_resolution = field<std::size_t>(j, "mesh_resolution");
  std::set<std::string> ids;
  for (const auto& e : field<json>(j, "shapes")) {
    ShapeRecord r;
    r.id = field<std::string>(e, "id");
    if (!ids.insert(r.id).second) throw FormatError("duplicate shape id '" + r.id + "'");
    const auto params = field<json>(e, "params");
    for (std::size_t i = 0; i < kParamCount; ++i) r.params.values[i] = field<double>(params, param_names()[i].c_str());
    r.attributes = field<std::vector<double>>(e, "attributes");
    if (r.attributes.size() != m.attribute_names.size()) {
      throw FormatError("shape '" + r.id + "' has " + std::to_string(r.attributes.size()) +
                        " attributes, expected " + std::to_string(m.attribute_names.size()));
    }
    for (double a : r.attributes) {
      if (!(a >= 0.0 && a <= 1.0)) throw FormatError("shape '" + r.id + "' has a label outside [0, 1]");
    }
    r.samples_path = field<std::string>(e, "samples");
    r.mesh_path = field<std::string>(e, "mesh");
    m.shapes.push_back(std::move(r));
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) { return manifest_from_json(read_text(path)); }

geo::Mesh car_mesh(const CarParams& params, double scale, std::size_t resolution) {
  const auto grid = geo::sample_grid(geo::GridSpec{resolution},
                                     [&](const geo::Vec3& p) { return normalized_car_sdf(params, scale, p); });
  return geo::marching_cubes(grid);
}

DatasetManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir) {
  if (config.count == 0) throw std::invalid_argument("dataset count must be at least 1");
  for (const auto& name : config.attribute_names) {
    if (!is_style_attribute(name)) param_from_name(name);
  }
  const auto shape_dir = out_dir / "shapes";
  std::error_code ec;
  std::filesystem::create_directories(shape_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + shape_dir.string() + ": " + ec.message());

  DatasetManifest m;
  m.seed = config.seed;
  m.attribute_names = config.attribute_names;
  m.ranges = config.ranges;
  m.scale = corpus_scale(config.ranges);
  m.sampling = config.sampling;
  m.mesh_resolution = config.mesh_resolution;

  for (std::size_t i = 0; i < config.count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "car_%04zu", i);
    std::mt19937_64 rng(derive_seed(config.seed, 2 * i));
    ShapeRecord r;
    r.id = id;
    r.params = sample_params(config.ranges, rng);
    r.attributes = car_attributes(r.params, config.ranges, config.attribute_names);
    const geo::Mesh mesh = car_mesh(r.params, m.scale, config.mesh_resolution);
    const auto samples = geo::sample_sdf(
        mesh, [&](const geo::Vec3& p) { return normalized_car_sdf(r.params, m.scale, p); },
        config.sampling, derive_seed(config.seed, 2 * i + 1));
    r.mesh_path = "shapes/" + r.id + ".obj";
    r.samples_path = "shapes/" + r.id + ".samples";
    geo::save_mesh(mesh, out_dir / r.mesh_path);
    geo::save_samples(samples, out_dir / r.samples_path);
    m.shapes.push_back(std::move(r));
  }
  atomic_write(out_dir / "manifest.json", manifest_to_json(m));
  return m;
}

}  // namespace sdfedit::cars
