#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "../fixtures.hpp"
#include "lod3/pipeline.hpp"
#include "lod3/synth.hpp"
#include "lod3/text.hpp"

using namespace lod3;
namespace fs = std::filesystem;

namespace {

// Exit status of the CLI with stdout and stderr captured into `log`.
int run_cli(const std::string& args, const std::string& log, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(LOD3_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Below about 400 rays/m^2 the window clusters pick up gaps and their
// rectangularity stops tying with the door's; with three clusters the 5/95
// percentile bounds then drop the extremes.
SynthSpec small_spec() { return SynthSpec::defaults(); }

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_pipeline_config(
      "# comment\n"
      "rays = r.txt\n"
      "solid = /abs/solid.txt\n"
      "templates = t.txt\n"
      "texture = wall_front img.raster img.corr\n"
      "texture = wall_back img2.raster img2.corr\n"
      "vs = 0.2\n"
      "p_high = 0.75\n"
      "conflict_aggregation = mean\n"
      "sigma_absolute = true\n",
      "/base");
  CHECK(cfg.rays == "/base/r.txt");
  CHECK(cfg.solid == "/abs/solid.txt");
  CHECK(cfg.textures.size() == 2);
  CHECK(cfg.textures[1].corr == "/base/img2.corr");
  CHECK(cfg.occupancy.voxel_size == 0.2);
  CHECK(cfg.extraction.p_high == 0.75);
  CHECK(cfg.conflict_aggregation == Aggregation::Mean);
  CHECK(cfg.uncertainty.absolute_units);
  CHECK(cfg.effective_band() == doctest::Approx(0.6));
  CHECK_NOTHROW(cfg.validate());

  CHECK_THROWS_AS(parse_pipeline_config("rays r.txt\n", ""), ParseError);
  CHECK_THROWS_AS(parse_pipeline_config("rays =\n", ""), ParseError);
  CHECK_THROWS_AS(parse_pipeline_config("colour = red\n", ""), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("vs = 0.1\nvs = 0.2\n", ""), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("vs = tiny\n", ""), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("texture = a b\n", ""), ConfigError);
}

TEST_CASE("non-positive voxel size fails before any stage runs") {
  fixture::TempDir dir("cfg_vs");
  auto cfg = parse_pipeline_config("rays = r\nsolid = s\ntemplates = t\nvs = 0\n", dir.path.string());
  cfg.out_dir = dir.file("out");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  try {
    run_pipeline(cfg);
    FAIL("expected a config error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "config");
    CHECK(exit_code_for(e) == 2);
  }
  CHECK(!fs::exists(dir.file("out")));
}

TEST_CASE("synthetic scenes are deterministic") {
  fixture::TempDir a("synth_a"), b("synth_b");
  const auto spec = small_spec();
  write_synth_scene(synth_scene(spec), spec, a.path.string());
  write_synth_scene(synth_scene(spec), spec, b.path.string());
  for (const char* f : {"rays.txt", "points.txt", "texture.raster", "texture.corr", "gt_instances.txt",
                        "gt_lod3.solid", "solid.txt", "pipeline.cfg"})
    CHECK(text::read_file(a.file(f)) == text::read_file(b.file(f)));
  auto other = spec;
  other.seed = 7;
  CHECK(format_rays(synth_scene(other).rays) != text::read_file(a.file("rays.txt")));

  auto bad = spec;
  bad.openings.push_back({OpeningLabel::Window, {1.5, 1.5, 2.0, 2.0}});
  CHECK_THROWS_AS(synth_scene(bad), SpecError);
  bad = spec;
  bad.openings.push_back({OpeningLabel::Window, {9.5, 1.0, 10.5, 2.0}});
  CHECK_THROWS_AS(synth_scene(bad), SpecError);
}

TEST_CASE("end-to-end on the default synthetic scene") {
  fixture::TempDir dir("e2e");
  const auto spec = small_spec();
  const auto cfg_path = write_synth_scene(synth_scene(spec), spec, dir.path.string());
  auto cfg = read_pipeline_config(cfg_path);
  const auto r = run_pipeline(cfg);
  CHECK(r.evaluated);
  CHECK(r.metrics.counts.tp == 3);
  CHECK(r.metrics.counts.fp == 0);
  CHECK(r.metrics.watertight);
  CHECK(r.model.openings.size() == 3);
  for (const char* f : {"occupancy.txt", "voxels.txt", "conflict_wall_front.raster", "pc_wall_front.raster",
                        "tex_wall_front.raster", "posterior_wall_front.raster", "instances.txt", "lod3.gml",
                        "lod3.solid", "metrics.txt", "report.txt"})
    CHECK(fs::exists(fs::path(cfg.out_dir) / f));

  // Same inputs, byte-identical outputs.
  const std::string first_metrics = text::read_file((fs::path(cfg.out_dir) / "metrics.txt").string());
  const std::string first_gml = text::read_file((fs::path(cfg.out_dir) / "lod3.gml").string());
  cfg.out_dir = dir.file("again");
  run_pipeline(cfg);
  CHECK(text::read_file(dir.file("again/metrics.txt")) == first_metrics);
  CHECK(text::read_file(dir.file("again/lod3.gml")) == first_gml);
}

TEST_CASE("pipeline conflict map of one noise-free opening") {
  fixture::TempDir dir("one_opening");
  SynthSpec spec = small_spec();
  spec.noise_sigma = 0.0;
  spec.openings = {{OpeningLabel::Window, {3.0, 1.2, 4.5, 2.8}}};
  const auto cfg_path = write_synth_scene(synth_scene(spec), spec, dir.path.string());
  const auto cfg = read_pipeline_config(cfg_path);
  run_pipeline(cfg);
  const auto map = read_raster((fs::path(cfg.out_dir) / "conflict_wall_front.raster").string());
  double umin = 1e9, vmin = 1e9, umax = -1e9, vmax = -1e9;
  for (int r = 0; r < map.rows(); ++r)
    for (int c = 0; c < map.cols(); ++c) {
      if (!(map.at(r, c, 0) > 0.5f)) continue;
      const Point3 p = uv_to_world(map.frame(), {(c + 0.5) * map.frame().cell, (r + 0.5) * map.frame().cell});
      umin = std::min(umin, p.x);
      umax = std::max(umax, p.x);
      vmin = std::min(vmin, p.z);
      vmax = std::max(vmax, p.z);
    }
  // Pixel centres of the conflicted region, widened to cell edges.
  const double cell = map.frame().cell;
  CHECK(std::abs((umin - cell / 2) - 3.0) <= cell + 1e-9);
  CHECK(std::abs((umax + cell / 2) - 4.5) <= cell + 1e-9);
  CHECK(std::abs((vmin - cell / 2) - 1.2) <= cell + 1e-9);
  CHECK(std::abs((vmax + cell / 2) - 2.8) <= cell + 1e-9);
}

TEST_CASE("pipeline on a wall without openings") {
  fixture::TempDir dir("no_openings");
  SynthSpec spec = small_spec();
  spec.openings.clear();
  const auto cfg_path = write_synth_scene(synth_scene(spec), spec, dir.path.string());
  const auto cfg = read_pipeline_config(cfg_path);
  const auto r = run_pipeline(cfg);
  CHECK(r.instances.empty());
  CHECK(!r.evaluated);  // AO = 0: no rates
  CHECK(r.metrics.watertight);
  const auto map = read_raster((fs::path(cfg.out_dir) / "conflict_wall_front.raster").string());
  int conflicted = 0;
  for (int rr = 0; rr < map.rows(); ++rr)
    for (int c = 0; c < map.cols(); ++c) conflicted += map.at(rr, c, 0) > 0.5f;
  CHECK(conflicted == 0);
}

TEST_CASE("CLI exit codes and stage names") {
  fixture::TempDir dir("cli");
  const auto log = dir.file("log.txt");
  CHECK(run_cli("--help", log) == 0);
  CHECK(run_cli("", log) == 2);
  CHECK(run_cli("frobnicate", log) == 2);

  CHECK(run_cli("synth --out-dir " + dir.file("scene") + " --density 400", log) == 0);
  const std::string cfg = dir.file("scene/pipeline.cfg");
  REQUIRE(fs::exists(cfg));

  // Missing rays file: input error, message names the stage.
  fs::remove(dir.file("scene/rays.txt"));
  CHECK(run_cli("pipeline --config " + cfg, log) == 2);
  CHECK(text::read_file(log).find("stage occupancy") != std::string::npos);

  CHECK(run_cli("pipeline --config " + cfg + " --vs -1", log) == 2);
  CHECK(text::read_file(log).find("stage config") != std::string::npos);
  CHECK(run_cli("pipeline --config " + dir.file("missing.cfg"), log) == 2);
  CHECK(run_cli("pipeline --config " + cfg + " --p-high 2", log) == 2);

  // Full run with LOD3_OUT_DIR overriding the config's out_dir.
  CHECK(run_cli("synth --out-dir " + dir.file("scene2") + " --density 400", log) == 0);
  CHECK(run_cli("pipeline --config " + dir.file("scene2/pipeline.cfg"), log, "LOD3_OUT_DIR=" + dir.file("env_out")) ==
        0);
  CHECK(fs::exists(dir.file("env_out/metrics.txt")));
  CHECK(!fs::exists(dir.file("scene2/out")));
}

TEST_CASE("CLI stage subcommands chain") {
  fixture::TempDir dir("cli_stages");
  const auto log = dir.file("log.txt");
  const std::string s = dir.file("scene");
  REQUIRE(run_cli("synth --out-dir " + s + " --density 400", log) == 0);
  const std::string o = dir.file("o");
  fs::create_directories(o);
  CHECK(run_cli("raycast --rays " + s + "/rays.txt --solid " + s + "/solid.txt --out " + o + "/occ.txt", log) == 0);
  CHECK(run_cli("conflicts --occupancy " + o + "/occ.txt --solid " + s + "/solid.txt --face wall_front --out-dir " + o,
                log) == 0);
  CHECK(run_cli("project-points --points " + s + "/points.txt --solid " + s + "/solid.txt --face wall_front --out " + o +
                    "/pc.raster",
                log) == 0);
  CHECK(run_cli("project-image --image " + s + "/texture.raster --corr " + s + "/texture.corr --solid " + s +
                    "/solid.txt --face wall_front --out " + o + "/tex.raster",
                log) == 0);
  CHECK(run_cli("fuse --conflict " + o + "/conflict_wall_front.raster --pc " + o + "/pc.raster --tex " + o +
                    "/tex.raster --out " + o + "/post.raster",
                log) == 0);
  CHECK(run_cli("extract --posterior " + o + "/post.raster --pc " + o + "/pc.raster --tex " + o + "/tex.raster --out " +
                    o + "/inst.txt",
                log) == 0);
  CHECK(read_instances(o + "/inst.txt").size() == 3);
  CHECK(run_cli("reconstruct --solid " + s + "/solid.txt --instances " + o + "/inst.txt --templates " + s +
                    "/templates.txt --out-gml " + o + "/m.gml --out-solid " + o + "/m.solid",
                log) == 0);
  CHECK(run_cli("evaluate --pred " + o + "/inst.txt --gt " + s + "/gt_instances.txt --model " + o + "/m.gml --gt-model " +
                    s + "/gt_lod3.solid --out-dir " + o + "/eval",
                log) == 0);
  CHECK(text::read_file(o + "/eval/metrics.txt").find("tp=3\n") != std::string::npos);
  // Bad correspondences are an input error.
  text::write_file(o + "/bad.corr", "corr 0 0 0 0\ncorr 1 1 1 0\ncorr 2 2 1 1\ncorr 0 1 0 1\n");
  CHECK(run_cli("project-image --image " + s + "/texture.raster --corr " + o + "/bad.corr --solid " + s +
                    "/solid.txt --face wall_front --out " + o + "/t2.raster",
                log) == 2);
}
