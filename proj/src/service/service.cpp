#include "sdfedit/service/service.hpp"

#include "sdfedit/common/io.hpp"
#include "sdfedit/geometry/measure.hpp"
#include "sdfedit/numerics/checkpoint.hpp"
#include "sdfedit/pipeline/stages.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace sdfedit::service {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kVersion = 1;

std::string checkpoint_hash(const std::vector<nn::NamedTensor>& tensors) {
  return hex64(fnv1a64(nn::encode_checkpoint(tensors)));
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const std::size_t j = path.find('/', i);
    const std::size_t end = j == std::string::npos ? path.size() : j;
    if (end > i) parts.push_back(path.substr(i, end - i));
    i = end;
  }
  return parts;
}

std::string display_name(const std::string& id) {
  std::string name = id;
  std::replace(name.begin(), name.end(), '_', ' ');
  if (!name.empty()) name[0] = char(std::toupper(static_cast<unsigned char>(name[0])));
  return name;
}

json named(const std::vector<std::string>& names, const std::vector<double>& values) {
  json j = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = values[i];
  return j;
}

double rounded(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

EditService::EditService(sdf::SdfModel model, reg::RegressorBundle regressor, std::vector<edit::EditorBundle> editors,
                         ServiceConfig config)
    : model_(std::move(model)), regressor_(std::move(regressor)), config_(config) {
  if (config_.max_resolution < 2 || config_.default_resolution < 2 ||
      config_.default_resolution > config_.max_resolution) {
    throw std::invalid_argument("resolutions must satisfy 2 <= default <= max");
  }
  if (config_.mesh_workers == 0) throw std::invalid_argument("mesh_workers must be >= 1");
  const std::size_t d = model_.decoder.config().latent_dim;
  if (regressor_.model.latent_dim() != d) throw std::invalid_argument("regressor latent size differs from the decoder's");
  if (regressor_.attribute_names.size() != regressor_.model.outputs()) {
    throw std::invalid_argument("regressor attribute names do not match its outputs");
  }

  std::string hashes = checkpoint_hash(nn::snapshot(std::as_const(model_.decoder).parameters()));
  hashes += checkpoint_hash({{"latents", model_.latents.codes.value}});
  hashes += checkpoint_hash(regressor_.model.state());
  for (auto& e : editors) {
    if (e.editor.latent_dim() != d) throw std::invalid_argument("editor latent size differs from the decoder's");
    if (e.editor.attributes() != regressor_.attribute_names) {
      throw std::invalid_argument("editor attributes differ from the regressor's");
    }
    const auto v = e.editor.config().variant;
    if (editors_.count(v)) throw std::invalid_argument("two editors of the same variant");
    editors_.emplace(v, std::move(e));
  }
  for (const auto& [v, e] : editors_) {
    hashes += std::string(edit::variant_name(v)) + checkpoint_hash(nn::snapshot(e.editor.parameters()));
  }
  model_hash_ = hex64(fnv1a64(hashes));

  for (std::size_t i = 0; i < model_.latents.size(); ++i) {
    const auto& id = model_.latents.ids[i];
    catalog_.push_back({id, display_name(id), model_.latents.code(i)});
    shape_index_[id] = i;
    base_latents_.emplace(latent_id(catalog_.back().latent), i);
  }
}

EditService EditService::load(const fs::path& workdir, ServiceConfig config) {
  const pipeline::Workdir w{workdir};
  auto model = pipeline::require_sdf(w);
  auto regressor = pipeline::require_regressor(w);
  std::vector<edit::EditorBundle> editors;
  for (edit::Variant v : {edit::Variant::kMlp, edit::Variant::kKan}) {
    if (fs::exists(w.editor(v) / "editor.json")) editors.push_back(edit::load_editor(w.editor(v)));
  }
  if (editors.empty()) throw pipeline::MissingArtifact("editor checkpoint", "train-editor", w.editor(edit::Variant::kMlp));
  return EditService(std::move(model), std::move(regressor), std::move(editors), config);
}

std::string EditService::latent_id(const std::vector<double>& latent) {
  ByteWriter w;
  for (double v : latent) w.f64(v);
  return hex64(fnv1a64(w.bytes()));
}

Response EditService::ok(json body) const {
  Response r;
  body["model_hash"] = model_hash_;
  r.body = body.dump();
  return r;
}

Response EditService::error(int status, const std::string& code, const std::string& message, json extra) const {
  Response r;
  r.status = status;
  extra["code"] = code;
  extra["message"] = message;
  r.body = json{{"error", extra}, {"model_hash", model_hash_}}.dump();
  return r;
}

Response EditService::handle(const Request& req) const {
  Response r;
  const auto parts = split_path(req.path);
  if (req.method == "OPTIONS") {
    r.status = 204;
    r.body.clear();
  } else if (parts.size() == 1 && parts[0] == "health") {
    r = req.method == "GET" ? health() : error(405, "method_not_allowed", "use GET");
  } else if (parts.size() == 1 && parts[0] == "shapes") {
    r = req.method == "GET" ? shapes() : error(405, "method_not_allowed", "use GET");
  } else if (parts.size() == 1 && parts[0] == "edit") {
    r = req.method == "POST" ? edit(req) : error(405, "method_not_allowed", "use POST");
  } else if (parts.size() == 3 && parts[2] == "mesh" && (parts[0] == "shapes" || parts[0] == "latents")) {
    if (req.method != "GET") {
      r = error(405, "method_not_allowed", "use GET");
    } else if (parts[0] == "shapes") {
      const auto it = shape_index_.find(parts[1]);
      if (it == shape_index_.end()) {
        r = error(404, "unknown_shape", "no shape '" + parts[1] + "'");
      } else {
        const auto& latent = catalog_[it->second].latent;
        r = mesh(latent, latent_id(latent), req);
      }
    } else {
      std::vector<double> latent;
      r = find_latent(parts[1], latent) ? mesh(latent, parts[1], req)
                                        : error(404, "unknown_latent", "no latent '" + parts[1] + "'");
    }
  } else {
    r = error(404, "not_found", "no route " + req.method + " " + req.path);
  }
  r.headers["X-Model-Hash"] = model_hash_;
  r.headers["Access-Control-Allow-Origin"] = "*";
  r.headers["Access-Control-Allow-Methods"] = "GET, POST, OPTIONS";
  r.headers["Access-Control-Allow-Headers"] = "Content-Type";
  r.headers["Access-Control-Expose-Headers"] = "X-Model-Hash, Retry-After";
  return r;
}

Response EditService::health() const {
  json variants = json::array();
  for (const auto& [v, e] : editors_) variants.push_back(edit::variant_name(v));
  return ok({{"schema", "sdfedit.health"},
             {"version", kVersion},
             {"status", "ok"},
             {"shapes", catalog_.size()},
             {"attributes", attributes()},
             {"variants", variants},
             {"latent_dim", model_.decoder.config().latent_dim},
             {"default_resolution", config_.default_resolution},
             {"max_resolution", config_.max_resolution}});
}

Response EditService::shapes() const {
  json list = json::array();
  for (const auto& s : catalog_) {
    list.push_back({{"id", s.id},
                    {"name", s.name},
                    {"latent_id", latent_id(s.latent)},
                    {"attributes", named(attributes(), regressor_.model.predict(s.latent))}});
  }
  return ok({{"schema", "sdfedit.shapes"}, {"version", kVersion}, {"attributes", attributes()}, {"shapes", list}});
}

Response EditService::edit(const Request& req) const {
  json body;
  try {
    body = json::parse(req.body);
  } catch (const json::exception&) {
    return error(400, "bad_json", "request body is not valid JSON");
  }
  if (!body.is_object()) return error(400, "bad_request", "request body must be an object");
  for (const auto& item : body.items()) {
    if (item.key() != "shape" && item.key() != "latent" && item.key() != "eps" && item.key() != "variant") {
      return error(400, "bad_request", "unknown field '" + item.key() + "'");
    }
  }
  if (body.contains("shape") == body.contains("latent")) {
    return error(400, "bad_request", "give exactly one of 'shape' and 'latent'");
  }

  std::vector<double> latent;
  if (body.contains("shape")) {
    if (!body["shape"].is_string()) return error(400, "bad_request", "'shape' must be a string");
    const auto it = shape_index_.find(body["shape"].get<std::string>());
    if (it == shape_index_.end()) return error(404, "unknown_shape", "no shape '" + body["shape"].get<std::string>() + "'");
    latent = catalog_[it->second].latent;
  } else {
    if (!body["latent"].is_string()) return error(400, "bad_request", "'latent' must be a latent id string");
    if (!find_latent(body["latent"].get<std::string>(), latent)) {
      return error(404, "unknown_latent", "no latent '" + body["latent"].get<std::string>() + "'");
    }
  }

  if (editors_.empty()) return error(503, "no_editor", "no editor is loaded");
  edit::Variant variant = editors_.count(edit::Variant::kMlp) ? edit::Variant::kMlp : editors_.begin()->first;
  if (body.contains("variant")) {
    if (!body["variant"].is_string()) return error(400, "bad_request", "'variant' must be a string");
    try {
      variant = edit::variant_from_name(body["variant"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      return error(400, "bad_request", e.what());
    }
    if (!editors_.count(variant)) {
      return error(400, "bad_request", "variant '" + body["variant"].get<std::string>() + "' is not loaded");
    }
  }
  const auto& editor = editors_.at(variant).editor;
  const auto& names = attributes();

  if (!body.contains("eps")) return error(400, "bad_request", "missing 'eps'");
  std::vector<double> eps(names.size(), 0.0);
  const json& je = body["eps"];
  auto strength = [&](const json& v, const std::string& name, double& out) -> bool {
    if (!v.is_number()) return false;
    out = v.get<double>();
    return std::isfinite(out) && out >= -1.0 && out <= 1.0 && !name.empty();
  };
  if (je.is_object()) {
    for (const auto& item : je.items()) {
      const auto pos = std::find(names.begin(), names.end(), item.key());
      if (pos == names.end()) return error(400, "unknown_attribute", "unknown attribute '" + item.key() + "'");
      if (!strength(item.value(), item.key(), eps[std::size_t(pos - names.begin())])) {
        return error(400, "validation", "strength for '" + item.key() + "' must be a number in [-1, 1]",
                     {{"attribute", item.key()}});
      }
    }
  } else if (je.is_array()) {
    if (je.size() != names.size()) {
      return error(400, "validation", "'eps' needs " + std::to_string(names.size()) + " strengths");
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (!strength(je[i], names[i], eps[i])) {
        return error(400, "validation", "strength for '" + names[i] + "' must be a number in [-1, 1]",
                     {{"attribute", names[i]}});
      }
    }
  } else {
    return error(400, "bad_request", "'eps' must be an object or an array");
  }

  pipeline::EditOutcome o;
  try {
    o = pipeline::apply_edit(editor, regressor_.model, latent, eps);
  } catch (const edit::DegenerateDirection& e) {
    return error(422, "degenerate_direction", e.what(), {{"attribute", e.attribute()}});
  }
  const auto id = latent_id(o.edited);
  remember(id, o.edited);
  return ok({{"schema", "sdfedit.edit"},
             {"version", kVersion},
             {"variant", edit::variant_name(variant)},
             {"base_latent_id", latent_id(latent)},
             {"latent_id", id},
             {"latent", o.edited},
             {"eps", named(names, eps)},
             {"before", named(names, o.before)},
             {"after", named(names, o.after)},
             {"displacement", o.displacement}});
}

Response EditService::mesh(const std::vector<double>& latent, const std::string& id, const Request& req) const {
  std::size_t res = config_.default_resolution;
  if (const auto it = req.query.find("res"); it != req.query.end()) {
    const std::string& s = it->second;
    const bool digits = !s.empty() && s.size() <= 6 && std::all_of(s.begin(), s.end(), [](char c) {
      return std::isdigit(static_cast<unsigned char>(c));
    });
    res = digits ? std::stoul(s) : 0;
    if (res < 2 || res > config_.max_resolution) {
      return error(400, "validation", "res must be an integer in [2, " + std::to_string(config_.max_resolution) + "]");
    }
  }
  bool binary = false;
  if (const auto it = req.query.find("format"); it != req.query.end()) {
    if (it->second != "json" && it->second != "bin") return error(400, "validation", "format must be json or bin");
    binary = it->second == "bin";
  }

  {
    std::unique_lock lock(worker_mutex_);
    if (!worker_cv_.wait_for(lock, config_.queue_wait, [&] { return busy_workers_ < config_.mesh_workers; })) {
      auto r = error(503, "busy", "mesh workers are busy; retry shortly");
      r.headers["Retry-After"] = "1";
      return r;
    }
    ++busy_workers_;
  }
  geo::Mesh m;
  try {
    m = sdf::reconstruct(model_.decoder, latent, {res, config_.largest_component_only});
  } catch (...) {
    std::lock_guard lock(worker_mutex_);
    --busy_workers_;
    worker_cv_.notify_one();
    throw;
  }
  {
    std::lock_guard lock(worker_mutex_);
    --busy_workers_;
  }
  worker_cv_.notify_one();

  const auto bytes = encode_mesh(m);
  const std::string mesh_hash = hex64(fnv1a64(bytes));
  if (binary) {
    Response r;
    r.content_type = "application/octet-stream";
    r.body.assign(bytes.begin(), bytes.end());
    r.headers["X-Mesh-Hash"] = mesh_hash;
    r.headers["X-Latent-Id"] = id;
    return r;
  }
  json positions = json::array();
  for (const auto& v : m.vertices) {
    positions.push_back(rounded(v.x()));
    positions.push_back(rounded(v.y()));
    positions.push_back(rounded(v.z()));
  }
  json indices = json::array();
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) indices.push_back(t[k]);
  }
  json bbox = nullptr;
  if (!m.empty()) {
    const auto b = geo::bounds(m);
    const auto size = geo::measure_attributes(m);
    bbox = {{"min", {b.lo.x(), b.lo.y(), b.lo.z()}},
            {"max", {b.hi.x(), b.hi.y(), b.hi.z()}},
            {"length", size.length},
            {"width", size.width},
            {"height", size.height}};
  }
  return ok({{"schema", "sdfedit.mesh"},
             {"version", kVersion},
             {"latent_id", id},
             {"resolution", res},
             {"vertex_count", m.vertices.size()},
             {"triangle_count", m.triangles.size()},
             {"mesh_hash", mesh_hash},
             {"bbox", bbox},
             {"positions", positions},
             {"indices", indices}});
}

bool EditService::find_latent(const std::string& id, std::vector<double>& out) const {
  if (const auto it = base_latents_.find(id); it != base_latents_.end()) {
    out = catalog_[it->second].latent;
    return true;
  }
  std::shared_lock lock(session_mutex_);
  const auto it = session_.find(id);
  if (it == session_.end()) return false;
  out = it->second;
  return true;
}

void EditService::remember(const std::string& id, const std::vector<double>& latent) const {
  if (base_latents_.count(id)) return;
  std::unique_lock lock(session_mutex_);
  if (!session_.emplace(id, latent).second) return;
  session_order_.push_back(id);
  while (session_order_.size() > config_.max_session_latents) {
    session_.erase(session_order_.front());
    session_order_.pop_front();
  }
}

std::vector<std::uint8_t> encode_mesh(const geo::Mesh& mesh) {
  ByteWriter w;
  w.raw("SDFEMESH");
  w.u32(1);
  w.u32(std::uint32_t(mesh.vertices.size()));
  w.u32(std::uint32_t(mesh.triangles.size()));
  for (const auto& v : mesh.vertices) {
    w.f32(float(v.x()));
    w.f32(float(v.y()));
    w.f32(float(v.z()));
  }
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) w.u32(std::uint32_t(t[k]));
  }
  return w.take();
}

geo::Mesh decode_mesh(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "mesh payload");
  if (r.raw(8) != "SDFEMESH") throw FormatError("mesh payload: bad magic");
  if (r.u32() != 1) throw FormatError("mesh payload: unsupported version");
  const std::uint32_t nv = r.u32();
  const std::uint32_t nt = r.u32();
  geo::Mesh m;
  m.vertices.reserve(nv);
  for (std::uint32_t i = 0; i < nv; ++i) {
    const double x = r.f32(), y = r.f32(), z = r.f32();
    m.vertices.emplace_back(x, y, z);
  }
  for (std::uint32_t i = 0; i < nt; ++i) {
    geo::Triangle t;
    for (int k = 0; k < 3; ++k) {
      t[k] = r.u32();
      if (t[k] >= nv) throw FormatError("mesh payload: vertex index out of range");
    }
    m.triangles.push_back(t);
  }
  if (!r.at_end()) throw FormatError("mesh payload: trailing bytes");
  return m;
}

}  // namespace sdfedit::service
