#include "sdfedit/pipeline/stages.hpp"

#include "sdfedit/common/io.hpp"
#include "sdfedit/geometry/chamfer.hpp"
#include "sdfedit/geometry/obj_io.hpp"
#include "sdfedit/geometry/sdf_samples.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace sdfedit::pipeline {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kStageFile = "stage.json";

std::string upstream_hash(const fs::path& dir) {
  const auto r = read_stage_record(dir);
  return r ? r->config_hash : std::string("none");
}

StageRecord make_record(const std::string& stage, const json& section, std::uint64_t seed,
                        const std::string& upstream) {
  json keyed = {{"config", section}, {"upstream", upstream}};
  return {stage, config_hash(keyed), seed, section};
}

bool up_to_date(const fs::path& dir, const StageRecord& want, const fs::path& artifact) {
  const auto have = read_stage_record(dir);
  return have && have->config_hash == want.config_hash && fs::exists(artifact);
}

void log_start(const StageRecord& r) {
  spdlog::info("stage={} config_hash={} seed={}", r.stage, r.config_hash, r.seed);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json named(const std::vector<std::string>& names, const std::vector<double>& values) {
  json j = json::object();
  for (std::size_t i = 0; i < names.size() && i < values.size(); ++i) j[names[i]] = values[i];
  return j;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

cars::DatasetManifest require_manifest(const Workdir& w) {
  if (!fs::exists(w.manifest())) throw MissingArtifact("dataset manifest", "gen-data", w.manifest());
  return cars::load_manifest(w.manifest());
}

sdf::SdfModel require_sdf(const Workdir& w) {
  if (!fs::exists(w.sdf() / "sdf.json")) throw MissingArtifact("decoder checkpoint", "train-sdf", w.sdf() / "sdf.json");
  return sdf::load_sdf_model(w.sdf());
}

reg::RegressorBundle require_regressor(const Workdir& w) {
  const auto p = w.regressor() / "regressor.json";
  if (!fs::exists(p)) throw MissingArtifact("regressor checkpoint", "train-regressor", p);
  return reg::load_regressor(w.regressor());
}

edit::EditorBundle require_editor(const Workdir& w, edit::Variant v) {
  const auto p = w.editor(v) / "editor.json";
  if (!fs::exists(p)) {
    throw MissingArtifact(std::string(edit::variant_name(v)) + " editor checkpoint", "train-editor", p);
  }
  return edit::load_editor(w.editor(v));
}

std::optional<StageRecord> read_stage_record(const fs::path& dir) {
  const auto p = dir / kStageFile;
  if (!fs::exists(p)) return std::nullopt;
  try {
    const auto j = json::parse(read_text(p));
    return StageRecord{j.at("stage").get<std::string>(), j.at("config_hash").get<std::string>(),
                       j.at("seed").get<std::uint64_t>(), j.at("config")};
  } catch (const json::exception& e) {
    throw FormatError("bad stage record " + p.string() + ": " + e.what());
  }
}

void write_stage_record(const fs::path& dir, const StageRecord& r) {
  fs::create_directories(dir);
  const json j = {{"stage", r.stage}, {"config_hash", r.config_hash}, {"seed", r.seed}, {"config", r.config}};
  atomic_write(dir / kStageFile, j.dump(2) + "\n");
}

bool gen_data(const Workdir& w, const RunConfig& c, bool force) {
  const auto rec = make_record("gen-data", section_json(c, "data"), c.data.seed, "none");
  if (!force && up_to_date(w.data(), rec, w.manifest())) {
    spdlog::info("gen-data: {} is up to date", w.data().string());
    return false;
  }
  log_start(rec);
  const auto m = cars::build_dataset(c.data, w.data());
  write_stage_record(w.data(), rec);
  spdlog::info("gen-data: {} shapes in {}", m.shapes.size(), w.data().string());
  return true;
}

bool train_sdf(const Workdir& w, const RunConfig& c, bool force) {
  const auto manifest = require_manifest(w);
  const auto rec = make_record("train-sdf", section_json(c, "sdf"), c.sdf.seed, upstream_hash(w.data()));
  if (!force && up_to_date(w.sdf(), rec, w.sdf() / "sdf.json")) {
    spdlog::info("train-sdf: {} is up to date", w.sdf().string());
    return false;
  }
  log_start(rec);
  std::vector<sdf::TrainingShape> shapes;
  for (const auto& s : manifest.shapes) shapes.push_back({s.id, geo::load_samples(w.data() / s.samples_path)});
  const std::size_t every = std::max<std::size_t>(1, c.sdf.epochs / 10);
  const auto model = sdf::train_autodecoder(shapes, c.sdf, [&](std::size_t epoch, double loss) {
    if (epoch % every == 0 || epoch + 1 == c.sdf.epochs) spdlog::info("train-sdf: epoch {} loss {:.6f}", epoch, loss);
  });
  sdf::save_sdf_model(model, w.sdf());
  write_stage_record(w.sdf(), rec);
  return true;
}

bool train_regressor(const Workdir& w, const RunConfig& c, bool force) {
  const auto manifest = require_manifest(w);
  const auto model = require_sdf(w);
  const auto rec =
      make_record("train-regressor", section_json(c, "regressor"), c.regressor.seed, upstream_hash(w.sdf()));
  if (!force && up_to_date(w.regressor(), rec, w.regressor() / "regressor.json")) {
    spdlog::info("train-regressor: {} is up to date", w.regressor().string());
    return false;
  }
  log_start(rec);
  const std::size_t n = model.latents.size();
  const std::size_t k = manifest.attribute_names.size();
  nn::Tensor labels({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    const auto* s = manifest.find(model.latents.ids[i]);
    if (!s) throw FormatError("decoder latent '" + model.latents.ids[i] + "' has no manifest entry");
    for (std::size_t a = 0; a < k; ++a) labels.at(i, a) = s->attributes[a];
  }
  auto trained = reg::train_regressor(model.latents.codes.value, labels, c.regressor);
  for (std::size_t a = 0; a < k; ++a) {
    spdlog::info("train-regressor: {} held-out mae {:.4f}", manifest.attribute_names[a],
                 trained.metrics.validation_mae[a]);
  }
  reg::save_regressor({std::move(trained.model), manifest.attribute_names, c.regressor, trained.metrics},
                      w.regressor());
  write_stage_record(w.regressor(), rec);
  return true;
}

bool train_editor(const Workdir& w, const RunConfig& c, bool force) {
  const auto regressor = require_regressor(w);
  const auto model = require_sdf(w);
  const auto dir = w.editor(c.editor.variant);
  const auto rec =
      make_record("train-editor", section_json(c, "editor"), c.editor.seed, upstream_hash(w.regressor()));
  if (!force && up_to_date(dir, rec, dir / "editor.json")) {
    spdlog::info("train-editor: {} is up to date", dir.string());
    return false;
  }
  log_start(rec);
  const auto stats = edit::latent_stats(model.latents.codes.value);
  const std::size_t every = std::max<std::size_t>(1, c.editor.steps / 10);
  auto trained = edit::train_editor(regressor.model, stats, regressor.attribute_names, c.editor,
                                    [&](std::size_t step, double loss) {
                                      if (step % every == 0 || step + 1 == c.editor.steps) {
                                        spdlog::info("train-editor: step {} loss {:.6f}", step, loss);
                                      }
                                    });
  edit::save_editor({std::move(trained.editor), stats, std::move(trained.loss_curve)}, dir);
  write_stage_record(dir, rec);
  return true;
}

std::vector<double> shape_latent(const sdf::SdfModel& model, const std::string& id) {
  const auto row = model.latents.find(id);
  if (!row) throw std::out_of_range("unknown shape id '" + id + "'");
  return model.latents.code(*row);
}

AttributeEdit parse_attribute_edit(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw std::invalid_argument("expected name=strength, got '" + text + "'");
  }
  const std::string value = text.substr(eq + 1);
  std::size_t used = 0;
  double eps = 0.0;
  try {
    eps = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size()) throw std::invalid_argument("bad strength '" + value + "' in '" + text + "'");
  return {text.substr(0, eq), eps};
}

std::vector<double> strength_vector(const edit::Editor& editor, const std::vector<AttributeEdit>& edits) {
  std::vector<double> eps(editor.attribute_count(), 0.0);
  std::set<std::string> seen;
  for (const auto& [name, value] : edits) {
    if (!seen.insert(name).second) throw std::invalid_argument("attribute '" + name + "' given twice");
    eps[editor.index_of(name)] = value;
  }
  return eps;
}

EditOutcome apply_edit(const edit::Editor& editor, const reg::Regressor& regressor, const std::vector<double>& latent,
                       const std::vector<double>& eps) {
  EditOutcome o;
  o.latent = latent;
  o.edited = editor.edit(latent, eps);
  o.before = regressor.predict(latent);
  o.after = regressor.predict(o.edited);
  o.displacement = distance(o.edited, latent);
  return o;
}

json edit_shape(const Workdir& w, const RunConfig& c, const std::string& id, const std::vector<AttributeEdit>& edits,
                const fs::path& out_obj) {
  const auto model = require_sdf(w);
  const auto regressor = require_regressor(w);
  const auto bundle = require_editor(w, c.editor.variant);
  const auto eps = strength_vector(bundle.editor, edits);
  const auto o = apply_edit(bundle.editor, regressor.model, shape_latent(model, id), eps);
  const auto mesh = sdf::reconstruct(model.decoder, o.edited, c.reconstruct);
  fs::create_directories(out_obj.parent_path().empty() ? fs::path(".") : out_obj.parent_path());
  geo::save_mesh(mesh, out_obj);
  const auto& names = bundle.editor.attributes();
  json j = {{"schema", "sdfedit.edit"},
            {"version", 1},
            {"shape", id},
            {"variant", edit::variant_name(c.editor.variant)},
            {"strengths", named(names, eps)},
            {"latent", o.latent},
            {"edited_latent", o.edited},
            {"before", named(names, o.before)},
            {"after", named(names, o.after)},
            {"displacement", o.displacement},
            {"resolution", c.reconstruct.resolution},
            {"vertices", mesh.vertices.size()},
            {"triangles", mesh.triangles.size()}};
  auto sidecar = out_obj;
  sidecar.replace_extension(".json");
  atomic_write(sidecar, j.dump(2) + "\n");
  spdlog::info("edit: {} -> {} (|dz| = {:.6f})", id, out_obj.string(), o.displacement);
  return j;
}

void reconstruct_shape(const Workdir& w, const RunConfig& c, const std::string& id, const fs::path& out_obj) {
  const auto model = require_sdf(w);
  const auto mesh = sdf::reconstruct(model.decoder, shape_latent(model, id), c.reconstruct);
  fs::create_directories(out_obj.parent_path().empty() ? fs::path(".") : out_obj.parent_path());
  geo::save_mesh(mesh, out_obj);
  spdlog::info("reconstruct: {} -> {} ({} triangles)", id, out_obj.string(), mesh.triangles.size());
}

MonotonicityStats edit_monotonicity(const edit::Editor& editor, const reg::Regressor& regressor,
                                    const std::vector<std::vector<double>>& probes, std::size_t attribute,
                                    const std::vector<double>& strengths) {
  MonotonicityStats s;
  if (strengths.empty()) throw std::invalid_argument("need at least one strength");
  const std::size_t k = editor.attribute_count();
  double edited = 0.0, other = 0.0;
  for (const auto& z : probes) {
    const auto base = regressor.predict(z);
    bool up = true;
    double previous = -std::numeric_limits<double>::infinity();
    std::vector<double> last;
    for (double e : strengths) {
      std::vector<double> eps(k, 0.0);
      eps[attribute] = e;
      last = regressor.predict(editor.edit(z, eps));
      up = up && last[attribute] > previous;
      previous = last[attribute];
    }
    s.monotone += up;
    edited += std::abs(last[attribute] - base[attribute]);
    for (std::size_t a = 0; a < k; ++a) {
      if (a != attribute) other += std::abs(last[a] - base[a]) / double(k - 1);
    }
  }
  s.probes = probes.size();
  s.mean_edited_change = edited / double(probes.size());
  s.mean_other_change = k > 1 ? other / double(probes.size()) : 0.0;
  return s;
}

json compute_metrics(const Workdir& w, const RunConfig& c) {
  const auto manifest = require_manifest(w);
  const auto model = require_sdf(w);
  const auto regressor = require_regressor(w);
  json report = {{"schema", "sdfedit.metrics"}, {"version", 1}};

  json chamfer = json::array();
  const std::size_t n_shapes = c.metrics.chamfer_shapes == 0 ? model.latents.size()
                                                             : std::min(c.metrics.chamfer_shapes, model.latents.size());
  for (std::size_t i = 0; i < n_shapes; ++i) {
    const auto& id = model.latents.ids[i];
    const auto* s = manifest.find(id);
    if (!s) throw FormatError("decoder latent '" + id + "' has no manifest entry");
    const auto reference = geo::load_mesh(w.data() / s->mesh_path);
    const auto mesh = sdf::reconstruct(model.decoder, model.latents.code(i), c.reconstruct);
    const double cd = mesh.empty() ? std::numeric_limits<double>::infinity()
                                   : geo::chamfer(mesh, reference, c.metrics.chamfer_points, c.metrics.chamfer_seed);
    spdlog::info("metrics: {} chamfer {:.3e}", id, cd);
    chamfer.push_back({{"shape", id}, {"chamfer", mesh.empty() ? json(nullptr) : json(cd)}});
  }
  report["chamfer"] = chamfer;
  report["reconstruct"] = section_json(c, "reconstruct");

  const auto& names = regressor.attribute_names;
  report["regressor"] = {{"train_mae", named(names, regressor.metrics.train_mae)},
                         {"validation_mae", named(names, regressor.metrics.validation_mae)},
                         {"validation_shapes", regressor.metrics.validation_rows.size()}};

  std::vector<std::vector<double>> probes;
  for (std::size_t p = 0; p < c.metrics.probes; ++p) probes.push_back(model.latents.code(p % model.latents.size()));
  json editing = json::object();
  for (edit::Variant v : {edit::Variant::kMlp, edit::Variant::kKan}) {
    if (!fs::exists(w.editor(v) / "editor.json")) continue;
    const auto bundle = edit::load_editor(w.editor(v));
    json per = json::object();
    for (std::size_t a = 0; a < bundle.editor.attribute_count(); ++a) {
      const auto s = edit_monotonicity(bundle.editor, regressor.model, probes, a, c.metrics.strengths);
      per[bundle.editor.attributes()[a]] = {{"monotone", s.monotone},
                                            {"probes", s.probes},
                                            {"mean_edited_change", s.mean_edited_change},
                                            {"mean_other_change", s.mean_other_change}};
    }
    editing[std::string(edit::variant_name(v))] = per;
  }
  report["editing"] = editing;
  report["strengths"] = c.metrics.strengths;
  atomic_write(w.metrics(), report.dump(2) + "\n");
  return report;
}

void embed(const Workdir& w, const RunConfig& c) {
  const auto model = require_sdf(w);
  const auto& codes = model.latents.codes.value;
  const auto proj = sdf::project_latents(codes, c.embed_dims);
  std::string coords = "id";
  for (std::size_t d = 0; d < c.embed_dims; ++d) coords += ",pc" + std::to_string(d + 1);
  coords += "\n";
  std::string latents = "id";
  for (std::size_t d = 0; d < codes.cols(); ++d) latents += ",z" + std::to_string(d);
  latents += "\n";
  for (std::size_t i = 0; i < model.latents.size(); ++i) {
    coords += model.latents.ids[i];
    for (std::size_t d = 0; d < c.embed_dims; ++d) coords += "," + num(proj.coords.at(i, d));
    coords += "\n";
    latents += model.latents.ids[i];
    for (std::size_t d = 0; d < codes.cols(); ++d) latents += "," + num(codes.at(i, d));
    latents += "\n";
  }
  fs::create_directories(w.embed());
  atomic_write(w.embed() / "coords.csv", coords);
  atomic_write(w.embed() / "latents.csv", latents);
  const json j = {{"explained_variance_ratio", proj.explained_variance_ratio}, {"shapes", model.latents.size()}};
  atomic_write(w.embed() / "embed.json", j.dump(2) + "\n");
  spdlog::info("embed: {} shapes -> {}", model.latents.size(), w.embed().string());
}

}  // namespace sdfedit::pipeline
