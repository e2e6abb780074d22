#pragma once

#include "sdfedit/editor/editor.hpp"
#include "sdfedit/geometry/mesh.hpp"
#include "sdfedit/pipeline/config.hpp"
#include "sdfedit/regressor/regressor.hpp"
#include "sdfedit/sdfnet/autodecoder.hpp"
#include "sdfedit/synthcars/dataset.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdfedit::pipeline {

// Work directory layout:
//   data/manifest.json, data/shapes/*      gen-data
//   sdf/decoder.ckpt, sdf/sdf.json          train-sdf
//   regressor/regressor.{ckpt,json}         train-regressor
//   editor_mlp/, editor_kan/                train-editor
//   out/                                    edit, reconstruct
//   metrics.json                            metrics
//   embed/coords.csv, embed/latents.csv     embed
// Every training directory also holds stage.json: stage name, config hash,
// seed and the config section that produced it.
struct Workdir {
  std::filesystem::path root;

  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path manifest() const { return data() / "manifest.json"; }
  std::filesystem::path sdf() const { return root / "sdf"; }
  std::filesystem::path regressor() const { return root / "regressor"; }
  std::filesystem::path editor(edit::Variant v) const {
    return root / ("editor_" + std::string(edit::variant_name(v)));
  }
  std::filesystem::path out() const { return root / "out"; }
  std::filesystem::path metrics() const { return root / "metrics.json"; }
  std::filesystem::path embed() const { return root / "embed"; }
};

/// An upstream stage has not been run. `stage` is the subcommand that
/// produces `path`.
class MissingArtifact : public std::runtime_error {
 public:
  MissingArtifact(const std::string& what, std::string stage, std::filesystem::path path)
      : std::runtime_error("missing " + what + " " + path.string() + "; run '" + stage + "' first"),
        stage_(std::move(stage)),
        path_(std::move(path)) {}
  const std::string& stage() const noexcept { return stage_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::string stage_;
  std::filesystem::path path_;
};

cars::DatasetManifest require_manifest(const Workdir& w);
sdf::SdfModel require_sdf(const Workdir& w);
reg::RegressorBundle require_regressor(const Workdir& w);
edit::EditorBundle require_editor(const Workdir& w, edit::Variant v);

struct StageRecord {
  std::string stage;
  std::string config_hash;
  std::uint64_t seed = 0;
  nlohmann::json config;
};

/// Reads dir/stage.json, if any.
std::optional<StageRecord> read_stage_record(const std::filesystem::path& dir);
void write_stage_record(const std::filesystem::path& dir, const StageRecord& record);

/// Stages return false when the stage directory already holds the output of
/// an identical config and `force` is off; nothing is rewritten then.
bool gen_data(const Workdir& w, const RunConfig& c, bool force = false);
bool train_sdf(const Workdir& w, const RunConfig& c, bool force = false);
bool train_regressor(const Workdir& w, const RunConfig& c, bool force = false);
bool train_editor(const Workdir& w, const RunConfig& c, bool force = false);

/// Latent of a training shape; throws std::out_of_range for unknown ids.
std::vector<double> shape_latent(const sdf::SdfModel& model, const std::string& id);

using AttributeEdit = std::pair<std::string, double>;

/// Parses "name=eps".
AttributeEdit parse_attribute_edit(const std::string& text);
/// Dense strength vector in the editor's attribute order. Unknown names and
/// repeated names throw std::invalid_argument.
std::vector<double> strength_vector(const edit::Editor& editor, const std::vector<AttributeEdit>& edits);

struct EditOutcome {
  std::vector<double> latent;
  std::vector<double> edited;
  std::vector<double> before;
  std::vector<double> after;
  double displacement = 0.0;
};

EditOutcome apply_edit(const edit::Editor& editor, const reg::Regressor& regressor, const std::vector<double>& latent,
                       const std::vector<double>& eps);

/// Reconstructs shape `id`, edited by `edits`, into out_obj plus a JSON
/// sidecar next to it. Returns the sidecar content.
nlohmann::json edit_shape(const Workdir& w, const RunConfig& c, const std::string& id,
                          const std::vector<AttributeEdit>& edits, const std::filesystem::path& out_obj);
void reconstruct_shape(const Workdir& w, const RunConfig& c, const std::string& id,
                       const std::filesystem::path& out_obj);

/// Chamfer table, regressor MAE and edit monotonicity for every trained
/// editor variant; written to metrics.json and returned.
nlohmann::json compute_metrics(const Workdir& w, const RunConfig& c);

/// Principal-component coordinates (embed/coords.csv) and raw latents
/// (embed/latents.csv), one row per training shape.
void embed(const Workdir& w, const RunConfig& c);

struct MonotonicityStats {
  std::size_t monotone = 0;
  std::size_t probes = 0;
  double mean_edited_change = 0.0;
  double mean_other_change = 0.0;
};

/// Predicted-attribute response of single-attribute edits at increasing
/// strengths, over the given probe latents.
MonotonicityStats edit_monotonicity(const edit::Editor& editor, const reg::Regressor& regressor,
                                    const std::vector<std::vector<double>>& probes, std::size_t attribute,
                                    const std::vector<double>& strengths);

}  // namespace sdfedit::pipeline
