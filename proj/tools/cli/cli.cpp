#include "cli.hpp"

#include "sdfedit/common/io.hpp"
#include "sdfedit/pipeline/stages.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <optional>

namespace sdfedit::cli {
namespace {

namespace fs = std::filesystem;
using pipeline::RunConfig;

struct Common {
  std::string workdir = ".";
  std::string config;
  std::optional<std::uint64_t> seed;
  bool force = false;
  std::string log_level = "info";
};

template <typename T>
void take_flag(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

void add_common(CLI::App* sub, Common& c, bool trains) {
  sub->add_option("-w,--workdir", c.workdir, "Work directory holding every stage's artifacts");
  sub->add_option("-c,--config", c.config, "JSON run config; flags override it");
  sub->add_option("--log-level", c.log_level, "trace, debug, info, warn, error or off");
  if (trains) {
    sub->add_option("--seed", c.seed, "Seed of this stage");
    sub->add_flag("--force", c.force, "Re-run even if the stage is up to date");
  }
}

void setup_logging(const std::string& level) {
  static const auto logger = [] {
    auto l = spdlog::stderr_logger_st("sdfedit");
    l->set_pattern("[%l] %v");
    return l;
  }();
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

RunConfig base_config(const Common& c) {
  return c.config.empty() ? pipeline::config_from_json(nlohmann::json::object()) : pipeline::load_config(c.config);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Latent shape editing pipeline: synthetic cars, SDF decoder, attribute regressor, latent editors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sdfedit 1.0");

  Common common;

  // Flag overrides, applied on top of the config file.
  std::optional<std::size_t> count, mesh_res, epochs, latent_dim, steps, res, probes, dims, shapes;
  std::optional<double> lambda_reg, lambda_content;
  std::optional<bool> encoding;
  std::optional<std::string> variant;
  std::string shape, out;
  std::vector<std::string> attrs;
  bool all = false;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic car corpus");
  add_common(gen, common, true);
  gen->add_option("--count", count, "Number of cars");
  gen->add_option("--mesh-resolution", mesh_res, "Marching-cubes cells per axis of the reference meshes");

  auto* sdf = app.add_subcommand("train-sdf", "Train the auto-decoder and its latent table");
  add_common(sdf, common, true);
  sdf->add_option("--epochs", epochs);
  sdf->add_option("--latent-dim", latent_dim);
  sdf->add_option("--encoding", encoding, "Positional encoding of the query point (true/false)");

  auto* regr = app.add_subcommand("train-regressor", "Train the latent-to-attribute regressor");
  add_common(regr, common, true);
  regr->add_option("--epochs", epochs);

  auto* ed = app.add_subcommand("train-editor", "Train one editor variant against the frozen regressor");
  add_common(ed, common, true);
  ed->add_option("--variant", variant)->check(CLI::IsMember({"mlp", "kan"}));
  ed->add_option("--steps", steps);
  ed->add_option("--lambda-reg", lambda_reg);
  ed->add_option("--lambda-content", lambda_content);

  auto* e = app.add_subcommand("edit", "Edit a training shape and export the mesh");
  add_common(e, common, false);
  e->add_option("--shape", shape, "Shape id")->required();
  e->add_option("--attr", attrs, "name=strength, repeatable")->required();
  e->add_option("--variant", variant)->check(CLI::IsMember({"mlp", "kan"}));
  e->add_option("--res", res, "Marching-cubes cells per axis");
  e->add_option("-o,--out", out, "Output OBJ (default <workdir>/out/<shape>_edit.obj)");

  auto* rec = app.add_subcommand("reconstruct", "Extract the mesh of a training latent");
  add_common(rec, common, false);
  auto* shape_opt = rec->add_option("--shape", shape, "Shape id");
  rec->add_flag("--all", all, "Every training shape")->excludes(shape_opt);
  rec->add_option("--res", res, "Marching-cubes cells per axis");
  rec->add_option("-o,--out", out, "Output OBJ for a single shape (default <workdir>/out/<shape>.obj)");

  auto* met = app.add_subcommand("metrics", "Write metrics.json: chamfer table, regressor MAE, edit monotonicity");
  add_common(met, common, false);
  met->add_option("--res", res);
  met->add_option("--probes", probes);
  met->add_option("--chamfer-shapes", shapes, "Shapes in the chamfer table, 0 for all");

  auto* emb = app.add_subcommand("embed", "Export 2-D latent coordinates and raw latents as CSV");
  add_common(emb, common, false);
  emb->add_option("--dims", dims);

  std::vector<const char*> argv{"sdfedit"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    setup_logging(common.log_level);
    RunConfig c = base_config(common);
    take_flag(count, c.data.count);
    take_flag(mesh_res, c.data.mesh_resolution);
    take_flag(latent_dim, c.sdf.decoder.latent_dim);
    take_flag(encoding, c.sdf.decoder.positional_encoding);
    take_flag(steps, c.editor.steps);
    take_flag(lambda_reg, c.editor.lambda_reg);
    take_flag(lambda_content, c.editor.lambda_content);
    take_flag(res, c.reconstruct.resolution);
    take_flag(probes, c.metrics.probes);
    take_flag(shapes, c.metrics.chamfer_shapes);
    take_flag(dims, c.embed_dims);
    if (variant) c.editor.variant = edit::variant_from_name(*variant);
    if (*gen) take_flag(common.seed, c.data.seed);
    if (*sdf) {
      take_flag(common.seed, c.sdf.seed);
      take_flag(epochs, c.sdf.epochs);
    }
    if (*regr) {
      take_flag(common.seed, c.regressor.seed);
      take_flag(epochs, c.regressor.epochs);
    }
    if (*ed) take_flag(common.seed, c.editor.seed);
    pipeline::validate(c);

    const pipeline::Workdir w{common.workdir};
    if (*gen) {
      pipeline::gen_data(w, c, common.force);
    } else if (*sdf) {
      pipeline::train_sdf(w, c, common.force);
    } else if (*regr) {
      pipeline::train_regressor(w, c, common.force);
    } else if (*ed) {
      pipeline::train_editor(w, c, common.force);
    } else if (*e) {
      std::vector<pipeline::AttributeEdit> edits;
      for (const auto& a : attrs) edits.push_back(pipeline::parse_attribute_edit(a));
      const fs::path target = out.empty() ? w.out() / (shape + "_edit.obj") : fs::path(out);
      const auto j = pipeline::edit_shape(w, c, shape, edits, target);
      std::printf("%s\n", j.dump(2).c_str());
    } else if (*rec) {
      if (all) {
        if (!out.empty()) throw std::invalid_argument("--out names a single file; drop it with --all");
        for (const auto& id : pipeline::require_sdf(w).latents.ids) {
          pipeline::reconstruct_shape(w, c, id, w.out() / (id + ".obj"));
        }
      } else {
        if (shape.empty()) throw std::invalid_argument("reconstruct needs --shape or --all");
        pipeline::reconstruct_shape(w, c, shape, out.empty() ? w.out() / (shape + ".obj") : fs::path(out));
      }
    } else if (*met) {
      const auto j = pipeline::compute_metrics(w, c);
      std::printf("%s\n", j.dump(2).c_str());
    } else if (*emb) {
      pipeline::embed(w, c);
    }
    return kExitOk;
  } catch (const pipeline::MissingArtifact& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitMissingStage;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitError;
  }
}

}  // namespace sdfedit::cli
