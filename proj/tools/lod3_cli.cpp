// lod3: per-stage subcommands and the full pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>

#include "lod3/evaluate.hpp"
#include "lod3/extraction.hpp"
#include "lod3/fusion.hpp"
#include "lod3/occupancy.hpp"
#include "lod3/pipeline.hpp"
#include "lod3/rasters.hpp"
#include "lod3/reconstruct.hpp"
#include "lod3/synth.hpp"
#include "lod3/text.hpp"
#include "lod3/visibility.hpp"

namespace fs = std::filesystem;
using namespace lod3;

namespace {

const Face& face_or_throw(const BuildingSolid& solid, const std::string& id) {
  const Face* f = solid.find_face(id);
  if (f == nullptr) throw ConfigError("solid has no face '" + id + "'");
  return *f;
}

std::string in_dir(const std::string& dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  return (fs::path(dir) / name).string();
}

std::optional<FacadeRaster> maybe_raster(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_raster(path);
}

const FacadeRaster* ptr(const std::optional<FacadeRaster>& r) { return r ? &*r : nullptr; }

PolygonMesh model_mesh(const std::string& path) {
  if (fs::path(path).extension() == ".gml") return read_citygml(path).shell();
  return read_solid(path).mesh();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scan-to-LoD3 reconstruction: laser conflicts, evidence fusion, opening extraction and cutting."};
  app.require_subcommand(1);
  std::function<void()> run;

  // raycast
  OccupancyConfig occ;
  std::string rays_path, occ_out, occ_solid;
  auto* raycast = app.add_subcommand("raycast", "Integrate laser rays into a log-odds occupancy octree");
  raycast->add_option("--rays", rays_path, "Rays file (sx sy sz px py pz per line)")->required();
  raycast->add_option("--out", occ_out, "Occupancy output file")->required();
  raycast->add_option("--solid", occ_solid, "Extend the grid to cover this solid");
  raycast->add_option("--vs", occ.voxel_size, "Voxel size in meters")->capture_default_str();
  raycast->add_option("--l-hit", occ.l_hit, "Log-odds increment for hits")->capture_default_str();
  raycast->add_option("--l-miss", occ.l_miss, "Log-odds increment for misses")->capture_default_str();
  raycast->add_option("--l-min", occ.l_min, "Lower clamp")->capture_default_str();
  raycast->add_option("--l-max", occ.l_max, "Upper clamp")->capture_default_str();
  raycast->add_option("--prior", occ.prior, "Prior occupancy probability")->capture_default_str();
  raycast->add_option("--occ-threshold", occ.occ_threshold, "Occupied above this probability")->capture_default_str();
  raycast->add_option("--max-range", occ.max_range, "Maximum ray length")->capture_default_str();
  raycast->callback([&] {
    run = [&] {
      occ.validate();
      const auto rays = read_rays(rays_path);
      std::vector<Point3> extra;
      if (!occ_solid.empty())
        for (const auto& f : read_solid(occ_solid).faces)
          extra.insert(extra.end(), f.outer.vertices.begin(), f.outer.vertices.end());
      OccupancyTree tree(occ, grid_origin_for(rays, extra, occ.voxel_size));
      integrate_rays(tree, rays);
      write_occupancy(tree, occ_out);
      std::printf("%zu rays, %zu voxels -> %s\n", rays.size(), tree.size(), occ_out.c_str());
    };
  });

  // conflicts
  UncertaintyConfig unc;
  std::string cf_occ, cf_solid, cf_face, cf_out, cf_agg = "max";
  auto* conflicts = app.add_subcommand("conflicts", "Classify surface voxels and project conflict maps per face");
  conflicts->add_option("--occupancy", cf_occ, "Occupancy file from raycast")->required();
  conflicts->add_option("--solid", cf_solid, "Prior building solid")->required();
  conflicts->add_option("--face", cf_face, "Only this face (default: every wall)");
  conflicts->add_option("--out-dir", cf_out, "Directory for voxels.txt and conflict_<face>.raster")->required();
  conflicts->add_option("--mu-model", unc.mu_model, "Model offset")->capture_default_str();
  conflicts->add_option("--sigma-model", unc.sigma_model, "Model positioning sigma")->capture_default_str();
  conflicts->add_option("--mu-cloud", unc.mu_cloud, "Point cloud offset")->capture_default_str();
  conflicts->add_option("--sigma-cloud", unc.sigma_cloud, "Point cloud positioning sigma")->capture_default_str();
  conflicts->add_flag("--sigma-absolute", unc.absolute_units, "Uncertainties in meters instead of voxel sizes");
  conflicts->add_option("--aggregation", cf_agg, "Pixel aggregation: max or mean")->capture_default_str();
  conflicts->callback([&] {
    run = [&] {
      const auto agg = parse_aggregation(cf_agg);
      const OccupancyTree tree = read_occupancy(cf_occ);
      const BuildingSolid solid = read_solid(cf_solid);
      const auto classes = classify_surface_voxels(tree, solid, unc);
      text::write_file(in_dir(cf_out, "voxels.txt"), format_classifications(classes));
      for (const auto& f : solid.faces) {
        if (cf_face.empty() ? f.label != SurfaceLabel::Wall : f.id != cf_face) continue;
        const auto frame = make_face_frame(f, tree.voxel_size());
        const auto map = project_conflict_map(classes, f, frame, tree.grid_origin(), tree.voxel_size(), agg);
        write_raster(map, in_dir(cf_out, "conflict_" + f.id + ".raster"));
        std::printf("%s: %dx%d\n", f.id.c_str(), frame.height, frame.width);
      }
      if (!cf_face.empty()) (void)face_or_throw(solid, cf_face);
    };
  });

  // project-points
  std::string pp_points, pp_solid, pp_face, pp_out, pp_agg = "max";
  double pp_vs = 0.1;
  std::optional<double> pp_band;
  auto* project_points = app.add_subcommand("project-points", "Project labelled points onto a façade raster");
  project_points->add_option("--points", pp_points, "Labelled points file")->required();
  project_points->add_option("--solid", pp_solid, "Building solid")->required();
  project_points->add_option("--face", pp_face, "Target face id")->required();
  project_points->add_option("--out", pp_out, "Output raster")->required();
  project_points->add_option("--vs", pp_vs, "Raster cell size")->capture_default_str();
  project_points->add_option("--band", pp_band, "Max distance from the face plane (default 3 vs)");
  project_points->add_option("--aggregation", pp_agg, "Pixel aggregation: max or mean")->capture_default_str();
  project_points->callback([&] {
    run = [&] {
      if (!(pp_vs > 0.0)) throw ConfigError("vs must be > 0");
      const auto agg = parse_aggregation(pp_agg);
      const BuildingSolid solid = read_solid(pp_solid);
      const auto frame = make_face_frame(face_or_throw(solid, pp_face), pp_vs);
      const auto points = read_points(pp_points);
      write_raster(project_point_probabilities(points, frame, pp_band.value_or(3.0 * pp_vs), agg), pp_out);
    };
  });

  // project-image
  std::string pi_image, pi_corr, pi_solid, pi_face, pi_out;
  double pi_vs = 0.1;
  auto* project_image = app.add_subcommand("project-image", "Rectify an image probability raster onto a façade");
  project_image->add_option("--image", pi_image, "Raw image raster (face=-)")->required();
  project_image->add_option("--corr", pi_corr, "Four image/façade correspondences")->required();
  project_image->add_option("--solid", pi_solid, "Building solid")->required();
  project_image->add_option("--face", pi_face, "Target face id")->required();
  project_image->add_option("--out", pi_out, "Output raster")->required();
  project_image->add_option("--vs", pi_vs, "Raster cell size")->capture_default_str();
  project_image->callback([&] {
    run = [&] {
      if (!(pi_vs > 0.0)) throw ConfigError("vs must be > 0");
      const BuildingSolid solid = read_solid(pi_solid);
      const auto frame = make_face_frame(face_or_throw(solid, pi_face), pi_vs);
      write_raster(project_image_probabilities(read_raster(pi_image), read_correspondences(pi_corr), frame), pi_out);
    };
  });

  // fuse
  std::string fu_conflict, fu_pc, fu_tex, fu_cpt, fu_out;
  auto* fuse = app.add_subcommand("fuse", "Bayesian fusion of conflict, point-cloud and texture maps");
  fuse->add_option("--conflict", fu_conflict, "Conflict raster");
  fuse->add_option("--pc", fu_pc, "Point-cloud raster");
  fuse->add_option("--tex", fu_tex, "Texture raster");
  fuse->add_option("--cpt", fu_cpt, "Conditional probability table (default: built-in)");
  fuse->add_option("--out", fu_out, "Posterior raster")->required();
  fuse->callback([&] {
    run = [&] {
      if (fu_conflict.empty() && fu_pc.empty() && fu_tex.empty())
        throw ConfigError("fuse needs at least one of --conflict, --pc, --tex");
      const Cpt cpt = fu_cpt.empty() ? Cpt::defaults() : read_cpt(fu_cpt);
      const auto c = maybe_raster(fu_conflict), p = maybe_raster(fu_pc), t = maybe_raster(fu_tex);
      write_raster(fuse_maps(ptr(c), ptr(p), ptr(t), cpt), fu_out);
    };
  });

  // extract
  ExtractionConfig ext;
  std::string ex_post, ex_pc, ex_tex, ex_out;
  auto* extract = app.add_subcommand("extract", "Opening instances from a posterior raster");
  extract->add_option("--posterior", ex_post, "Posterior raster from fuse")->required();
  extract->add_option("--pc", ex_pc, "Point-cloud raster (labels)");
  extract->add_option("--tex", ex_tex, "Texture raster (labels)");
  extract->add_option("--out", ex_out, "Instances file")->required();
  extract->add_option("--p-high", ext.p_high, "Posterior threshold")->capture_default_str();
  extract->add_option("--kernel", ext.kernel, "Morphological kernel size (odd)")->capture_default_str();
  extract->add_option("--pe-up", ext.pe_up, "Upper rectangularity percentile")->capture_default_str();
  extract->add_option("--pe-lo", ext.pe_lo, "Lower rectangularity percentile")->capture_default_str();
  extract->add_option("--min-pixels", ext.min_pixels, "Smallest cluster kept")->capture_default_str();
  extract->callback([&] {
    run = [&] {
      ext.validate();
      const auto post = read_raster(ex_post);
      const auto p = maybe_raster(ex_pc), t = maybe_raster(ex_tex);
      const auto found = extract_instances(post, ptr(p), ptr(t), ext);
      write_instances(found, ex_out);
      std::printf("%zu instances -> %s\n", found.size(), ex_out.c_str());
    };
  });

  // reconstruct
  std::string rc_solid, rc_inst, rc_tpl, rc_gml, rc_out_solid, rc_sel = "first";
  double rc_depth = 0.1, rc_vs = 0.1;
  auto* reconstruct = app.add_subcommand("reconstruct", "Cut openings and fit templates into a LoD3 model");
  reconstruct->add_option("--solid", rc_solid, "Prior building solid")->required();
  reconstruct->add_option("--instances", rc_inst, "Instances file")->required();
  reconstruct->add_option("--templates", rc_tpl, "Template library")->required();
  reconstruct->add_option("--depth", rc_depth, "Recess depth")->capture_default_str();
  reconstruct->add_option("--vs", rc_vs, "Cell size of the façade frames")->capture_default_str();
  reconstruct->add_option("--template-selection", rc_sel, "first or aspect")->capture_default_str();
  reconstruct->add_option("--out-gml", rc_gml, "CityGML output");
  reconstruct->add_option("--out-solid", rc_out_solid, "Flattened solid output");
  reconstruct->callback([&] {
    run = [&] {
      if (!(rc_depth > 0.0)) throw ConfigError("depth must be > 0");
      if (!(rc_vs > 0.0)) throw ConfigError("vs must be > 0");
      if (rc_gml.empty() && rc_out_solid.empty()) throw ConfigError("need --out-gml or --out-solid");
      const auto model = reconstruct_lod3(read_solid(rc_solid), read_instances(rc_inst), read_template_library(rc_tpl),
                                          rc_depth, rc_vs, parse_template_selection(rc_sel));
      if (!rc_gml.empty()) write_citygml(model, rc_gml);
      if (!rc_out_solid.empty()) write_solid(flatten(model), rc_out_solid);
      std::printf("%zu openings placed\n", model.openings.size());
    };
  });

  // evaluate
  std::string ev_pred, ev_gt, ev_model, ev_gt_model, ev_out;
  double ev_iou = 0.5;
  int ev_mo = 0;
  std::optional<double> ev_spacing;
  auto* evaluate = app.add_subcommand("evaluate", "Detection rates, IoU, deviation and watertightness");
  evaluate->add_option("--pred", ev_pred, "Predicted instances")->required();
  evaluate->add_option("--gt", ev_gt, "Ground-truth instances")->required();
  evaluate->add_option("--model", ev_model, "Reconstructed model (.gml or solid)");
  evaluate->add_option("--gt-model", ev_gt_model, "Ground-truth model (.gml or solid)");
  evaluate->add_option("--iou-min", ev_iou, "IoU needed for a match")->capture_default_str();
  evaluate->add_option("--mo", ev_mo, "Laser-measured openings (default: all ground truth)");
  evaluate->add_option("--sample-spacing", ev_spacing, "Surface sample spacing (default 0.1)");
  evaluate->add_option("--out-dir", ev_out, "Directory for metrics.txt and report.txt")->required();
  evaluate->callback([&] {
    run = [&] {
      if (!(ev_iou > 0.0 && ev_iou <= 1.0)) throw ConfigError("iou-min must lie in (0, 1]");
      if (ev_mo < 0) throw ConfigError("mo must be >= 0");
      const auto pred = read_instances(ev_pred);
      const auto gt = read_instances(ev_gt);
      EvaluationMetrics m;
      const auto match = match_instances(pred, gt, ev_iou);
      m.counts = {static_cast<int>(gt.size()), ev_mo > 0 ? ev_mo : static_cast<int>(gt.size()),
                  static_cast<int>(pred.size()), match.tp, match.fp};
      m.fn = match.fn;
      m.matches = match.matches;
      m.rates = detection_rates(m.counts);
      m.median_iou = median_instance_iou(match, gt.size());
      m.median_iou_matched = median_instance_iou(match, gt.size(), true);
      m.min_iou_matched = match.matches.empty() ? 0.0 : 1.0;
      for (const auto& mm : match.matches) m.min_iou_matched = std::min(m.min_iou_matched, mm.iou);
      if (!ev_model.empty()) {
        const PolygonMesh mesh = model_mesh(ev_model);
        m.watertight = watertight(mesh);
        if (!ev_gt_model.empty()) {
          m.deviation = mesh_deviation(sample_surface(mesh, ev_spacing.value_or(0.1)), model_mesh(ev_gt_model));
          m.have_deviation = true;
        }
      }
      const std::string metrics = format_metrics(m);
      text::write_file(in_dir(ev_out, "metrics.txt"), metrics);
      text::write_file(in_dir(ev_out, "report.txt"), format_report(m, pred, gt, {}));
      std::fputs(metrics.c_str(), stdout);
    };
  });

  // pipeline
  std::string pl_config, pl_out_dir, pl_cpt;
  std::optional<double> pl_vs, pl_p_high, pl_pe_up, pl_pe_lo, pl_depth, pl_iou;
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage from a config file");
  pipeline->add_option("--config", pl_config, "key = value config file")->required();
  pipeline->add_option("--vs", pl_vs, "Override vs (voxel and raster cell size)");
  pipeline->add_option("--p-high", pl_p_high, "Override p_high");
  pipeline->add_option("--pe-up", pl_pe_up, "Override pe_up");
  pipeline->add_option("--pe-lo", pl_pe_lo, "Override pe_lo");
  pipeline->add_option("--cpt", pl_cpt, "Override cpt");
  pipeline->add_option("--depth", pl_depth, "Override depth");
  pipeline->add_option("--iou-min", pl_iou, "Override iou_min");
  pipeline->add_option("--out-dir", pl_out_dir, "Override out_dir (LOD3_OUT_DIR wins over both)");
  pipeline->footer("Config keys: rays solid points texture templates cpt gt_instances gt_model out_dir vs prior\n"
                   "l_hit l_miss l_min l_max occ_threshold max_range mu_model sigma_model mu_cloud sigma_cloud\n"
                   "sigma_absolute conflict_aggregation point_aggregation band_dist p_high kernel pe_up pe_lo\n"
                   "min_pixels depth iou_min template_selection measured_openings sample_spacing");
  pipeline->callback([&] {
    run = [&] {
      PipelineConfig cfg = read_pipeline_config(pl_config);
      auto num = [&](const char* key, const std::optional<double>& v) {
        if (v) cfg.set(key, text::format_double(*v));
      };
      num("vs", pl_vs);
      num("p_high", pl_p_high);
      num("pe_up", pl_pe_up);
      num("pe_lo", pl_pe_lo);
      num("depth", pl_depth);
      num("iou_min", pl_iou);
      if (!pl_cpt.empty()) cfg.set("cpt", pl_cpt);
      const char* env = std::getenv("LOD3_OUT_DIR");
      if (!pl_out_dir.empty() && (env == nullptr || *env == '\0')) cfg.set("out_dir", pl_out_dir);
      const auto result = run_pipeline(cfg);
      for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      std::fputs(format_metrics(result.metrics).c_str(), stdout);
    };
  });

  // synth
  SynthSpec spec = SynthSpec::defaults();
  std::string sy_out;
  bool sy_blinds = false;
  auto* synth = app.add_subcommand("synth", "Write a synthetic box-building scene and its pipeline config");
  synth->add_option("--out-dir", sy_out, "Scene directory")->required();
  synth->add_option("--density", spec.ray_density, "Rays per square meter of wall")->capture_default_str();
  synth->add_option("--noise", spec.noise_sigma, "Endpoint noise sigma in meters")->capture_default_str();
  synth->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
  synth->add_option("--vs", spec.voxel_size, "Voxel size written to the config")->capture_default_str();
  synth->add_option("--depth", spec.cut_depth, "Recess depth of the ground truth")->capture_default_str();
  synth->add_flag("--blinds", sy_blinds, "Close the first window: rays stop at the wall plane");
  synth->callback([&] {
    run = [&] {
      if (sy_blinds && !spec.openings.empty()) spec.openings.front().see_through = false;
      spec.glass_density = spec.ray_density;
      const auto scene = synth_scene(spec);
      const auto cfg = write_synth_scene(scene, spec, sy_out);
      std::printf("%zu rays, %zu points -> %s\n", scene.rays.size(), scene.points.size(), cfg.c_str());
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    run();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    if (const auto* v = dynamic_cast<const ValidationError*>(&e))
      for (const auto& line : v->violations()) std::fprintf(stderr, "  %s\n", line.c_str());
    const int code = exit_code_for(e);
    // Invalid input geometry is an input error when a subcommand loads it.
    if (dynamic_cast<const ValidationError*>(&e) != nullptr && dynamic_cast<const StageError*>(&e) == nullptr)
      return 2;
    return code;
  }
  return 0;
}
