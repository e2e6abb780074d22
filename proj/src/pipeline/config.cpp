#include "sdfedit/pipeline/config.hpp"

#include "sdfedit/common/io.hpp"

#include <set>

namespace sdfedit::pipeline {
namespace {

using nlohmann::json;

// Reads the keys of one JSON object and remembers which ones were consumed,
// so leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + path_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_unsigned()) throw ConfigError("'" + where(key) + "' must be a nonnegative integer");
    }
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError("'" + where(key) + "' has the wrong type: " + it->dump());
    }
  }

  void read_sizes(const char* key, std::vector<std::size_t>& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_array()) throw ConfigError("'" + where(key) + "' must be an array of integers");
    std::vector<std::size_t> v;
    for (const auto& x : *it) {
      if (!x.is_number_unsigned()) throw ConfigError("'" + where(key) + "' must hold nonnegative integers");
      v.push_back(x.get<std::size_t>());
    }
    out = std::move(v);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown config key '" + where(item.key()) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_data(Section s, cars::DatasetConfig& c) {
  s.read("count", c.count);
  s.read("seed", c.seed);
  s.read("mesh_resolution", c.mesh_resolution);
  s.read("n_surface", c.sampling.n_surface);
  s.read("n_uniform", c.sampling.n_uniform);
  s.read("bound", c.sampling.bound);
  if (const json* n = s.child("noise_scales")) {
    if (!n->is_array() || n->size() != 2 || !(*n)[0].is_number() || !(*n)[1].is_number()) {
      throw ConfigError("'data.noise_scales' must be two numbers");
    }
    c.sampling.noise_scales = {(*n)[0].get<double>(), (*n)[1].get<double>()};
  }
  s.read("attributes", c.attribute_names);
  if (const json* r = s.child("ranges")) {
    Section rs(*r, "data.ranges");
    for (auto& range : c.ranges) {
      std::vector<double> mm{range.min, range.max};
      rs.read(range.name.c_str(), mm);
      if (mm.size() != 2) throw ConfigError("'data.ranges." + range.name + "' must be [min, max]");
      range.min = mm[0];
      range.max = mm[1];
    }
    rs.finish();
  }
  s.finish();
}

void read_sdf(Section s, sdf::SdfTrainConfig& c) {
  s.read("latent_dim", c.decoder.latent_dim);
  s.read("bands", c.decoder.bands);
  s.read("positional_encoding", c.decoder.positional_encoding);
  s.read("hidden", c.decoder.hidden);
  s.read("layers", c.decoder.layers);
  s.read("skip_layer", c.decoder.skip_layer);
  s.read("delta", c.delta);
  s.read("prior_weight", c.prior_weight);
  s.read("latent_init_std", c.latent_init_std);
  s.read("lr_weights", c.lr_weights);
  s.read("lr_latents", c.lr_latents);
  s.read("epochs", c.epochs);
  s.read("points_per_shape", c.points_per_shape);
  s.read("shapes_per_batch", c.shapes_per_batch);
  s.read("seed", c.seed);
  s.finish();
}

void read_regressor(Section s, reg::RegressorConfig& c) {
  s.read_sizes("hidden", c.hidden);
  s.read("lr", c.lr);
  s.read("epochs", c.epochs);
  s.read("batch_size", c.batch_size);
  s.read("validation_fraction", c.validation_fraction);
  s.read("weight_decay", c.weight_decay);
  s.read("seed", c.seed);
  s.finish();
}

void read_editor(Section s, edit::EditorConfig& c) {
  std::string variant(edit::variant_name(c.variant));
  s.read("variant", variant);
  try {
    c.variant = edit::variant_from_name(variant);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("'editor.variant': ") + e.what());
  }
  s.read_sizes("hidden", c.hidden);
  s.read("lambda_dir", c.lambda_dir);
  s.read("lambda_reg", c.lambda_reg);
  s.read("lambda_content", c.lambda_content);
  s.read("swapped_bce", c.swapped_bce);
  s.read("steps", c.steps);
  s.read("batch_size", c.batch_size);
  s.read("lr", c.lr);
  s.read("single_attribute_probability", c.single_attribute_probability);
  s.read("max_attributes", c.max_attributes);
  s.read("seed", c.seed);
  if (const json* g = s.child("kan_grid")) {
    Section gs(*g, "editor.kan_grid");
    gs.read("lo", c.kan_grid.lo);
    gs.read("hi", c.kan_grid.hi);
    gs.read("intervals", c.kan_grid.intervals);
    gs.read("order", c.kan_grid.order);
    gs.finish();
  }
  s.finish();
}

json data_json(const cars::DatasetConfig& c) {
  json ranges = json::object();
  for (const auto& r : c.ranges) ranges[r.name] = {r.min, r.max};
  return {{"count", c.count},
          {"seed", c.seed},
          {"mesh_resolution", c.mesh_resolution},
          {"n_surface", c.sampling.n_surface},
          {"n_uniform", c.sampling.n_uniform},
          {"bound", c.sampling.bound},
          {"noise_scales", {c.sampling.noise_scales[0], c.sampling.noise_scales[1]}},
          {"attributes", c.attribute_names},
          {"ranges", ranges}};
}

json sdf_json(const sdf::SdfTrainConfig& c) {
  return {{"latent_dim", c.decoder.latent_dim},
          {"bands", c.decoder.bands},
          {"positional_encoding", c.decoder.positional_encoding},
          {"hidden", c.decoder.hidden},
          {"layers", c.decoder.layers},
          {"skip_layer", c.decoder.skip_layer},
          {"delta", c.delta},
          {"prior_weight", c.prior_weight},
          {"latent_init_std", c.latent_init_std},
          {"lr_weights", c.lr_weights},
          {"lr_latents", c.lr_latents},
          {"epochs", c.epochs},
          {"points_per_shape", c.points_per_shape},
          {"shapes_per_batch", c.shapes_per_batch},
          {"seed", c.seed}};
}

json regressor_json(const reg::RegressorConfig& c) {
  return {{"hidden", c.hidden},   {"lr", c.lr},
          {"epochs", c.epochs},   {"batch_size", c.batch_size},
          {"validation_fraction", c.validation_fraction},
          {"weight_decay", c.weight_decay},
          {"seed", c.seed}};
}

json editor_json(const edit::EditorConfig& c) {
  return {{"variant", edit::variant_name(c.variant)},
          {"hidden", c.hidden},
          {"lambda_dir", c.lambda_dir},
          {"lambda_reg", c.lambda_reg},
          {"lambda_content", c.lambda_content},
          {"swapped_bce", c.swapped_bce},
          {"steps", c.steps},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"single_attribute_probability", c.single_attribute_probability},
          {"max_attributes", c.max_attributes},
          {"seed", c.seed},
          {"kan_grid",
           {{"lo", c.kan_grid.lo}, {"hi", c.kan_grid.hi}, {"intervals", c.kan_grid.intervals},
            {"order", c.kan_grid.order}}}};
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Section top(j, "");
  if (const json* seed = top.child("seed")) {
    if (!seed->is_number_unsigned()) throw ConfigError("'seed' must be a nonnegative integer");
    const auto s = seed->get<std::uint64_t>();
    c.data.seed = c.sdf.seed = c.regressor.seed = c.editor.seed = s;
  }
  if (const json* s = top.child("data")) read_data(Section(*s, "data"), c.data);
  if (const json* s = top.child("sdf")) read_sdf(Section(*s, "sdf"), c.sdf);
  if (const json* s = top.child("regressor")) read_regressor(Section(*s, "regressor"), c.regressor);
  if (const json* s = top.child("editor")) read_editor(Section(*s, "editor"), c.editor);
  if (const json* s = top.child("reconstruct")) {
    Section rs(*s, "reconstruct");
    rs.read("resolution", c.reconstruct.resolution);
    rs.read("largest_component_only", c.reconstruct.largest_component_only);
    rs.finish();
  }
  if (const json* s = top.child("metrics")) {
    Section ms(*s, "metrics");
    ms.read("probes", c.metrics.probes);
    ms.read("chamfer_shapes", c.metrics.chamfer_shapes);
    ms.read("chamfer_points", c.metrics.chamfer_points);
    ms.read("chamfer_seed", c.metrics.chamfer_seed);
    ms.read("strengths", c.metrics.strengths);
    ms.finish();
  }
  if (const json* s = top.child("embed")) {
    Section es(*s, "embed");
    es.read("dims", c.embed_dims);
    es.finish();
  }
  top.finish();
  validate(c);
  return c;
}

void validate(const RunConfig& c) {
  try {
    sdf::validate(c.sdf);
    edit::validate(c.editor);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.data.count == 0) throw ConfigError("'data.count' must be >= 1");
  if (c.data.mesh_resolution < 2) throw ConfigError("'data.mesh_resolution' must be >= 2");
  if (!(c.regressor.validation_fraction > 0 && c.regressor.validation_fraction < 1)) {
    throw ConfigError("'regressor.validation_fraction' must lie in (0, 1)");
  }
  if (c.regressor.epochs == 0 || c.regressor.batch_size == 0) {
    throw ConfigError("'regressor.epochs' and 'regressor.batch_size' must be >= 1");
  }
  if (c.reconstruct.resolution < 2) throw ConfigError("'reconstruct.resolution' must be >= 2");
  if (c.metrics.probes == 0) throw ConfigError("'metrics.probes' must be >= 1");
  for (double e : c.metrics.strengths) {
    if (!(e > 0 && e <= 1)) throw ConfigError("'metrics.strengths' must lie in (0, 1]");
  }
  if (c.embed_dims == 0) throw ConfigError("'embed.dims' must be >= 1");
}

json config_to_json(const RunConfig& c) {
  json j;
  for (const char* s : {"data", "sdf", "regressor", "editor", "reconstruct", "metrics", "embed"}) {
    j[s] = section_json(c, s);
  }
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

json section_json(const RunConfig& c, const std::string& section) {
  if (section == "data") return data_json(c.data);
  if (section == "sdf") return sdf_json(c.sdf);
  if (section == "regressor") return regressor_json(c.regressor);
  if (section == "editor") return editor_json(c.editor);
  if (section == "reconstruct") {
    return {{"resolution", c.reconstruct.resolution},
            {"largest_component_only", c.reconstruct.largest_component_only}};
  }
  if (section == "metrics") {
    return {{"probes", c.metrics.probes},
            {"chamfer_shapes", c.metrics.chamfer_shapes},
            {"chamfer_points", c.metrics.chamfer_points},
            {"chamfer_seed", c.metrics.chamfer_seed},
            {"strengths", c.metrics.strengths}};
  }
  if (section == "embed") return {{"dims", c.embed_dims}};
  throw std::invalid_argument("unknown config section '" + section + "'");
}

std::string config_hash(const json& section) { return hex64(fnv1a64(section.dump())); }

}  // namespace sdfedit::pipeline
