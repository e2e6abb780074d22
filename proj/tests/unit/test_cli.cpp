#include "cli.hpp"
#include "sdfedit/common/io.hpp"
#include "sdfedit/geometry/chamfer.hpp"
#include "sdfedit/geometry/obj_io.hpp"
#include "sdfedit/pipeline/stages.hpp"

#include <doctest.h>
#include <unistd.h>

#include <map>

using namespace sdfedit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const json kTiny = json::parse(R"({
  "seed": 3,
  "data": {"count": 6, "mesh_resolution": 32, "n_surface": 1500, "n_uniform": 300},
  "sdf": {"latent_dim": 8, "hidden": 32, "layers": 3, "skip_layer": 0, "epochs": 30,
          "points_per_shape": 128, "delta": 1.0},
  "regressor": {"hidden": [16], "epochs": 50},
  "editor": {"hidden": [8], "steps": 50},
  "reconstruct": {"resolution": 24},
  "metrics": {"probes": 4, "chamfer_shapes": 2, "chamfer_points": 2000}
})");

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("sdfedit_cli_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string write_config(const fs::path& dir, const json& j) {
  const auto p = dir / "config.json";
  atomic_write(p, j.dump());
  return p.string();
}

int run_cli(std::vector<std::string> args, const fs::path& work, const std::string& config) {
  args.insert(args.end(), {"-w", work.string(), "-c", config, "--log-level", "off"});
  return sdfedit::cli::run(args);
}

// Every file under `dir`, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_text(e.path());
  }
  return out;
}

void run_pipeline(const fs::path& work, const std::string& config) {
  REQUIRE(run_cli({"gen-data"}, work, config) == 0);
  REQUIRE(run_cli({"train-sdf"}, work, config) == 0);
  REQUIRE(run_cli({"train-regressor"}, work, config) == 0);
  REQUIRE(run_cli({"train-editor"}, work, config) == 0);
  REQUIRE(run_cli({"train-editor", "--variant", "kan"}, work, config) == 0);
}

}  // namespace

TEST_CASE("config: unknown keys, wrong types and bad values are rejected with the key named") {
  auto bad = [](const char* text) { return pipeline::config_from_json(json::parse(text)); };
  CHECK_NOTHROW(bad("{}"));
  CHECK_THROWS_WITH_AS(bad(R"({"sdf": {"epoch": 3}})"), doctest::Contains("sdf.epoch"), pipeline::ConfigError);
  CHECK_THROWS_WITH_AS(bad(R"({"colour": 1})"), doctest::Contains("colour"), pipeline::ConfigError);
  CHECK_THROWS_WITH_AS(bad(R"({"editor": {"kan_grid": {"knots": 3}}})"), doctest::Contains("editor.kan_grid.knots"),
                       pipeline::ConfigError);
  CHECK_THROWS_WITH_AS(bad(R"({"data": {"ranges": {"wingspan": [0, 1]}}})"), doctest::Contains("wingspan"),
                       pipeline::ConfigError);
  CHECK_THROWS_WITH_AS(bad(R"({"regressor": {"epochs": -5}})"), doctest::Contains("regressor.epochs"),
                       pipeline::ConfigError);
  CHECK_THROWS_WITH_AS(bad(R"({"editor": {"lr": "fast"}})"), doctest::Contains("editor.lr"), pipeline::ConfigError);
  CHECK_THROWS_AS(bad(R"({"editor": {"variant": "rbf"}})"), pipeline::ConfigError);
  CHECK_THROWS_AS(bad(R"({"editor": {"lambda_dir": 0}})"), pipeline::ConfigError);
  CHECK_THROWS_AS(bad(R"({"metrics": {"strengths": [0.1, 1.5]}})"), pipeline::ConfigError);
  CHECK_THROWS_AS(bad(R"({"data": []})"), pipeline::ConfigError);
}

TEST_CASE("config: top-level seed reaches every stage; stage seeds win; round trip is stable") {
  const auto c = pipeline::config_from_json(json::parse(R"({"seed": 9, "editor": {"seed": 4}})"));
  CHECK(c.data.seed == 9);
  CHECK(c.sdf.seed == 9);
  CHECK(c.regressor.seed == 9);
  CHECK(c.editor.seed == 4);
  const auto again = pipeline::config_from_json(pipeline::config_to_json(c));
  CHECK(pipeline::config_to_json(again) == pipeline::config_to_json(c));
  CHECK(pipeline::config_hash(pipeline::section_json(c, "sdf")) ==
        pipeline::config_hash(pipeline::section_json(again, "sdf")));
  auto other = c;
  other.sdf.epochs += 1;
  CHECK(pipeline::config_hash(pipeline::section_json(c, "sdf")) !=
        pipeline::config_hash(pipeline::section_json(other, "sdf")));
}

TEST_CASE("attribute edits: parsing and dense strength vectors") {
  CHECK(pipeline::parse_attribute_edit("total_height=0.3") == pipeline::AttributeEdit{"total_height", 0.3});
  CHECK(pipeline::parse_attribute_edit("a=-1") == pipeline::AttributeEdit{"a", -1.0});
  for (const char* bad : {"total_height", "=0.3", "a=", "a=0.3x", "a=x"}) {
    CHECK_THROWS_AS(pipeline::parse_attribute_edit(bad), std::invalid_argument);
  }
  edit::EditorConfig ec;
  ec.hidden = {2};
  const edit::Editor editor({"a", "b", "c"}, 3, ec);
  CHECK(pipeline::strength_vector(editor, {{"c", 0.2}, {"a", -0.1}}) == std::vector<double>{-0.1, 0.0, 0.2});
  CHECK_THROWS_AS(pipeline::strength_vector(editor, {{"a", 0.1}, {"a", 0.2}}), std::invalid_argument);
  CHECK_THROWS_AS(pipeline::strength_vector(editor, {{"d", 0.1}}), std::invalid_argument);
}

TEST_CASE("cli: gen-data twice gives identical manifests") {
  TempDir t("gen");
  const auto cfg = write_config(t.path, kTiny);
  REQUIRE(run_cli({"gen-data", "--count", "8", "--seed", "7"}, t.path / "a", cfg) == 0);
  REQUIRE(run_cli({"gen-data", "--count", "8", "--seed", "7"}, t.path / "b", cfg) == 0);
  const auto a = snapshot(t.path / "a" / "data");
  CHECK(a == snapshot(t.path / "b" / "data"));
  const auto m = pipeline::require_manifest({t.path / "a"});
  CHECK(m.shapes.size() == 8);  // flag beat the config's 6
  CHECK(m.seed == 7);
}

TEST_CASE("cli: stages out of order exit 2 and name the missing stage") {
  TempDir t("order");
  const auto cfg = write_config(t.path, kTiny);
  CHECK(run_cli({"train-sdf"}, t.path, cfg) == sdfedit::cli::kExitMissingStage);
  CHECK(run_cli({"metrics"}, t.path, cfg) == sdfedit::cli::kExitMissingStage);
  REQUIRE(run_cli({"gen-data"}, t.path, cfg) == 0);
  REQUIRE(run_cli({"train-sdf"}, t.path, cfg) == 0);
  CHECK(run_cli({"train-editor"}, t.path, cfg) == sdfedit::cli::kExitMissingStage);
  CHECK(run_cli({"edit", "--shape", "car_0000", "--attr", "total_height=0.1"}, t.path, cfg) == sdfedit::cli::kExitMissingStage);
  const auto c = pipeline::load_config(cfg);
  try {
    pipeline::train_editor({t.path}, c);
    FAIL("expected MissingArtifact");
  } catch (const pipeline::MissingArtifact& e) {
    CHECK(e.stage() == "train-regressor");
    CHECK(std::string(e.what()).find("regressor checkpoint") != std::string::npos);
  }
  REQUIRE(run_cli({"train-regressor"}, t.path, cfg) == 0);
  CHECK(run_cli({"edit", "--shape", "car_0000", "--attr", "total_height=0.1", "--variant", "kan"}, t.path, cfg) ==
        sdfedit::cli::kExitMissingStage);
}

TEST_CASE("cli: bad invocations fail without touching the work directory") {
  TempDir t("bad");
  auto j = kTiny;
  j["sdf"]["learning_rate"] = 1.0;
  const auto bad_cfg = write_config(t.path, j);
  CHECK(run_cli({"gen-data"}, t.path / "w", bad_cfg) == sdfedit::cli::kExitError);
  CHECK_FALSE(fs::exists(t.path / "w" / "data"));
  CHECK(sdfedit::cli::run({"no-such-stage"}) != 0);
  CHECK(sdfedit::cli::run({}) != 0);
  CHECK(run_cli({"gen-data"}, t.path / "w", (t.path / "missing.json").string()) == sdfedit::cli::kExitError);
}

TEST_CASE("cli: full pipeline is deterministic, resumable and stages stay in their lanes") {
  TempDir t("pipe");
  const auto cfg = write_config(t.path, kTiny);
  const auto a = t.path / "a", b = t.path / "b";
  run_pipeline(a, cfg);
  run_pipeline(b, cfg);
  const auto snap_a = snapshot(a);
  CHECK(snap_a.count("sdf/decoder.ckpt") == 1);
  CHECK(snap_a.count("editor_kan/editor.ckpt") == 1);
  CHECK(snap_a == snapshot(b));

  // Re-running a finished stage is a no-op; forcing it reproduces the bytes.
  const pipeline::Workdir w{a};
  const auto c = pipeline::load_config(cfg);
  CHECK_FALSE(pipeline::train_sdf(w, c));
  CHECK(pipeline::train_sdf(w, c, true));
  CHECK(snapshot(a) == snap_a);

  // Training the editor leaves upstream artifacts alone.
  const auto upstream = std::map<std::string, std::map<std::string, std::string>>{
      {"data", snapshot(w.data())}, {"sdf", snapshot(w.sdf())}, {"regressor", snapshot(w.regressor())}};
  REQUIRE(run_cli({"train-editor", "--seed", "11", "--force"}, a, cfg) == 0);
  CHECK(snapshot(w.data()) == upstream.at("data"));
  CHECK(snapshot(w.sdf()) == upstream.at("sdf"));
  CHECK(snapshot(w.regressor()) == upstream.at("regressor"));
  CHECK(snapshot(w.editor(edit::Variant::kMlp)) != snapshot(pipeline::Workdir{b}.editor(edit::Variant::kMlp)));
  const auto rec = pipeline::read_stage_record(w.editor(edit::Variant::kMlp));
  REQUIRE(rec);
  CHECK(rec->seed == 11);

  // A changed upstream invalidates downstream stages.
  auto c2 = c;
  c2.sdf.epochs = 31;
  CHECK(pipeline::train_sdf(w, c2));
  CHECK(pipeline::train_regressor(w, c2));
}

TEST_CASE("cli: zero-strength edit reproduces the plain reconstruction; outputs are well formed") {
  TempDir t("edit");
  const auto cfg = write_config(t.path, kTiny);
  const auto w = t.path / "w";
  run_pipeline(w, cfg);
  REQUIRE(run_cli({"edit", "--shape", "car_0002", "--attr", "total_height=0", "-o", (t.path / "zero.obj").string()}, w,
              cfg) == 0);
  REQUIRE(run_cli({"reconstruct", "--shape", "car_0002", "-o", (t.path / "plain.obj").string()}, w, cfg) == 0);
  const auto zero = geo::load_mesh(t.path / "zero.obj");
  const auto plain = geo::load_mesh(t.path / "plain.obj");
  REQUIRE_FALSE(plain.empty());
  CHECK(read_text(t.path / "zero.obj") == read_text(t.path / "plain.obj"));
  CHECK(geo::chamfer(zero, plain, 2000, 1) == 0.0);
  const auto side = json::parse(read_text(t.path / "zero.json"));
  CHECK(side.at("displacement").get<double>() == 0.0);
  CHECK(side.at("before") == side.at("after"));
  CHECK(side.at("latent") == side.at("edited_latent"));

  REQUIRE(run_cli({"edit", "--shape", "car_0002", "--attr", "total_height=0.3", "--attr", "hood_length=0.2"}, w, cfg) ==
          0);
  const auto multi = json::parse(read_text(w / "out" / "car_0002_edit.json"));
  CHECK(multi.at("strengths").at("total_height").get<double>() == 0.3);
  CHECK(multi.at("strengths").at("hood_length").get<double>() == 0.2);
  CHECK(multi.at("strengths").at("wheelbase").get<double>() == 0.0);
  CHECK(multi.at("displacement").get<double>() > 0.0);

  CHECK(run_cli({"edit", "--shape", "car_9999", "--attr", "total_height=0.3"}, w, cfg) == sdfedit::cli::kExitError);
  CHECK(run_cli({"edit", "--shape", "car_0002", "--attr", "total_height=1.5"}, w, cfg) == sdfedit::cli::kExitError);
  CHECK(run_cli({"edit", "--shape", "car_0002", "--attr", "wingspan=0.1"}, w, cfg) == sdfedit::cli::kExitError);
  CHECK(run_cli({"edit", "--shape", "car_0002", "--attr", "total_height"}, w, cfg) == sdfedit::cli::kExitError);

  REQUIRE(run_cli({"reconstruct", "--all"}, w, cfg) == 0);
  CHECK(fs::exists(w / "out" / "car_0005.obj"));

  REQUIRE(run_cli({"metrics", "--probes", "3"}, w, cfg) == 0);
  const auto m = json::parse(read_text(w / "metrics.json"));
  CHECK(m.at("chamfer").size() == 2);
  CHECK(m.at("regressor").at("validation_mae").size() == 10);
  CHECK(m.at("editing").at("mlp").at("total_height").at("probes").get<int>() == 3);
  CHECK(m.at("editing").contains("kan"));

  REQUIRE(run_cli({"embed"}, w, cfg) == 0);
  const auto coords = read_text(w / "embed" / "coords.csv");
  CHECK(coords.rfind("id,pc1,pc2\n", 0) == 0);
  CHECK(std::count(coords.begin(), coords.end(), '\n') == 7);
  const auto latents = read_text(w / "embed" / "latents.csv");
  CHECK(latents.rfind("id,z0,", 0) == 0);
}
