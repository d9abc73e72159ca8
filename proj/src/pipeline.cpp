#include "lod3/pipeline.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>

#include "lod3/fusion.hpp"
#include "lod3/text.hpp"

namespace lod3 {

namespace fs = std::filesystem;

namespace {

std::string resolve(std::string_view value, const std::string& base_dir) {
  fs::path p{std::string(value)};
  if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
  return p.lexically_normal().string();
}

double number(std::string_view key, std::string_view value) {
  try {
    return text::parse_double(value, key);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

int integer(std::string_view key, std::string_view value) {
  try {
    return static_cast<int>(text::parse_int(value, key));
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

bool boolean(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("invalid boolean '" + std::string(value) + "' for " + std::string(key));
}

}  // namespace

void PipelineConfig::set(std::string_view key, std::string_view value, const std::string& base_dir) {
  value = text::trim(value);
  if (key == "rays") rays = resolve(value, base_dir);
  else if (key == "solid") solid = resolve(value, base_dir);
  else if (key == "points") points = resolve(value, base_dir);
  else if (key == "templates") templates = resolve(value, base_dir);
  else if (key == "cpt") cpt = resolve(value, base_dir);
  else if (key == "gt_instances") gt_instances = resolve(value, base_dir);
  else if (key == "gt_model") gt_model = resolve(value, base_dir);
  else if (key == "out_dir") out_dir = resolve(value, base_dir);
  else if (key == "texture") {
    const auto parts = text::split(value);
    if (parts.size() != 3) throw ConfigError("texture needs '<face_id> <image> <corr>'");
    textures.push_back({std::string(parts[0]), resolve(parts[1], base_dir), resolve(parts[2], base_dir)});
  } else if (key == "vs") occupancy.voxel_size = number(key, value);
  else if (key == "prior") occupancy.prior = number(key, value);
  else if (key == "l_hit") occupancy.l_hit = number(key, value);
  else if (key == "l_miss") occupancy.l_miss = number(key, value);
  else if (key == "l_min") occupancy.l_min = number(key, value);
  else if (key == "l_max") occupancy.l_max = number(key, value);
  else if (key == "occ_threshold") occupancy.occ_threshold = number(key, value);
  else if (key == "max_range") occupancy.max_range = number(key, value);
  else if (key == "mu_model") uncertainty.mu_model = number(key, value);
  else if (key == "sigma_model") uncertainty.sigma_model = number(key, value);
  else if (key == "mu_cloud") uncertainty.mu_cloud = number(key, value);
  else if (key == "sigma_cloud") uncertainty.sigma_cloud = number(key, value);
  else if (key == "sigma_absolute") uncertainty.absolute_units = boolean(key, value);
  else if (key == "conflict_aggregation") conflict_aggregation = parse_aggregation(value);
  else if (key == "point_aggregation") point_aggregation = parse_aggregation(value);
  else if (key == "band_dist") band_dist = number(key, value);
  else if (key == "p_high") extraction.p_high = number(key, value);
  else if (key == "kernel") extraction.kernel = integer(key, value);
  else if (key == "pe_up") extraction.pe_up = number(key, value);
  else if (key == "pe_lo") extraction.pe_lo = number(key, value);
  else if (key == "min_pixels") extraction.min_pixels = integer(key, value);
  else if (key == "depth") depth = number(key, value);
  else if (key == "iou_min") iou_min = number(key, value);
  else if (key == "template_selection") template_selection = parse_template_selection(value);
  else if (key == "measured_openings") measured_openings = integer(key, value);
  else if (key == "sample_spacing") sample_spacing = number(key, value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void PipelineConfig::validate() const {
  occupancy.validate();
  uncertainty.validate();
  extraction.validate();
  if (rays.empty()) throw ConfigError("missing required key 'rays'");
  if (solid.empty()) throw ConfigError("missing required key 'solid'");
  if (templates.empty()) throw ConfigError("missing required key 'templates'");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
  if (!(depth > 0.0) || !std::isfinite(depth)) throw ConfigError("depth must be > 0");
  if (!(iou_min > 0.0 && iou_min <= 1.0)) throw ConfigError("iou_min must lie in (0, 1]");
  if (band_dist && !(*band_dist > 0.0)) throw ConfigError("band_dist must be > 0");
  if (sample_spacing && !(*sample_spacing > 0.0)) throw ConfigError("sample_spacing must be > 0");
  if (measured_openings < 0) throw ConfigError("measured_openings must be >= 0");
  std::set<std::string> faces;
  for (const auto& t : textures)
    if (!faces.insert(t.face_id).second) throw ConfigError("two textures for face '" + t.face_id + "'");
}

PipelineConfig parse_pipeline_config(std::string_view content, const std::string& base_dir) {
  PipelineConfig cfg;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const std::size_t nl = content.find('\n', pos);
    const std::string_view line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string_view value = text::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ParseError("config line " + std::to_string(line_no) + ": empty key or value");
    if (key != "texture" && !seen.insert(key).second)
      throw ConfigError("config line " + std::to_string(line_no) + ": repeated key '" + key + "'");
    cfg.set(key, value, base_dir);
  }
  return cfg;
}

PipelineConfig read_pipeline_config(const std::string& path) {
  const std::string content = text::read_file(path);
  PipelineConfig cfg = parse_pipeline_config(content, fs::path(path).parent_path().string());
  if (const char* env = std::getenv("LOD3_OUT_DIR"); env != nullptr && *env != '\0') cfg.out_dir = env;
  return cfg;
}

int exit_code_for(const std::exception& e) {
  if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->input_error() ? 2 : 1;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DegenerateCorrespondence*>(&e) ||
      dynamic_cast<const SpecError*>(&e))
    return 2;
  return 1;
}

namespace {

// Runs `f`; errors become StageError. Input stages report every lod3 error
// as an input error (the file was unreadable, malformed or invalid).
template <class F>
auto stage(const std::string& name, bool input, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, input || exit_code_for(e) == 2, e.what());
  } catch (const std::exception& e) {
    throw StageError(name, false, e.what());
  }
}

std::string file_name(const std::string& prefix, const std::string& face) { return prefix + "_" + face + ".raster"; }

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  stage("config", true, [&] { config.validate(); });
  PipelineResult result;
  const double v_s = config.occupancy.voxel_size;
  const fs::path out(config.out_dir);
  stage("output", true, [&] {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory '" + config.out_dir + "': " + ec.message());
  });
  auto emit = [&](const std::string& name) {
    result.artifacts.push_back(name);
    return (out / name).string();
  };

  const BuildingSolid solid = stage("load", true, [&] { return read_solid(config.solid); });
  const auto templates = stage("load", true, [&] { return read_template_library(config.templates); });
  const Cpt cpt = stage("load", true, [&] { return config.cpt.empty() ? Cpt::defaults() : read_cpt(config.cpt); });
  std::vector<const Face*> walls;
  for (const auto& f : solid.faces)
    if (f.label == SurfaceLabel::Wall) walls.push_back(&f);
  for (const auto& t : config.textures)
    if (solid.find_face(t.face_id) == nullptr)
      throw StageError("load", true, "texture refers to unknown face '" + t.face_id + "'");

  // occupancy
  const auto rays = stage("occupancy", true, [&] { return read_rays(config.rays); });
  OccupancyTree tree = stage("occupancy", false, [&] {
    std::vector<Point3> corners;
    for (const auto& f : solid.faces) corners.insert(corners.end(), f.outer.vertices.begin(), f.outer.vertices.end());
    OccupancyTree t(config.occupancy, grid_origin_for(rays, corners, v_s));
    integrate_rays(t, rays);
    write_occupancy(t, emit("occupancy.txt"));
    return t;
  });

  // visibility
  const auto classes = stage("visibility", false, [&] {
    auto c = classify_surface_voxels(tree, solid, config.uncertainty);
    text::write_file(emit("voxels.txt"), format_classifications(c));
    return c;
  });

  // rasters
  const auto points = stage("rasters", true, [&] {
    return config.points.empty() ? std::vector<LabeledPoint>{} : read_points(config.points);
  });
  std::map<std::string, TextureInput> texture_for;
  for (const auto& t : config.textures) texture_for[t.face_id] = t;
  struct FaceMaps {
    const Face* face;
    FacadeFrame frame;
    FacadeRaster conflict;
    std::optional<FacadeRaster> pc;
    std::optional<FacadeRaster> tex;
  };
  std::vector<FaceMaps> maps;
  for (const Face* f : walls) {
    FaceMaps m{f, make_face_frame(*f, v_s), {}, {}, {}};
    stage("rasters", false, [&] {
      m.conflict = project_conflict_map(classes, *f, m.frame, tree.grid_origin(), v_s, config.conflict_aggregation);
      write_raster(m.conflict, emit(file_name("conflict", f->id)));
      if (!config.points.empty()) {
        m.pc = project_point_probabilities(points, m.frame, config.effective_band(), config.point_aggregation);
        write_raster(*m.pc, emit(file_name("pc", f->id)));
      }
    });
    if (auto it = texture_for.find(f->id); it != texture_for.end()) {
      const auto image = stage("rasters", true, [&] { return read_raster(it->second.image); });
      const auto corr = stage("rasters", true, [&] { return read_correspondences(it->second.corr); });
      m.tex = stage("rasters", false, [&] {
        auto r = project_image_probabilities(image, corr, m.frame);
        write_raster(r, emit(file_name("tex", f->id)));
        return r;
      });
    }
    maps.push_back(std::move(m));
  }

  // fusion + extraction
  for (const auto& m : maps) {
    const FacadeRaster* pc = m.pc ? &*m.pc : nullptr;
    const FacadeRaster* tex = m.tex ? &*m.tex : nullptr;
    const FacadeRaster posterior = stage("fusion", false, [&] {
      auto p = fuse_maps(&m.conflict, pc, tex, cpt);
      write_raster(p, emit(file_name("posterior", m.face->id)));
      return p;
    });
    stage("extraction", false, [&] {
      auto found = extract_instances(posterior, pc, tex, config.extraction);
      result.instances.insert(result.instances.end(), found.begin(), found.end());
    });
  }
  stage("extraction", false, [&] { write_instances(result.instances, emit("instances.txt")); });

  // reconstruct
  stage("reconstruct", false, [&] {
    std::vector<OpeningInstance> accepted;
    for (const auto& inst : merge_overlapping(result.instances)) {
      auto trial = accepted;
      trial.push_back(inst);
      try {
        (void)cut_openings(solid, trial, config.depth, v_s);
        accepted.push_back(inst);
      } catch (const OpeningOutsideFace& e) {
        result.warnings.push_back("skipped opening on " + inst.face_id + ": " + e.what());
      } catch (const OpeningTouchesBoundary& e) {
        result.warnings.push_back("skipped opening on " + inst.face_id + ": " + e.what());
      }
    }
    result.model = reconstruct_lod3(solid, accepted, templates, config.depth, v_s, config.template_selection);
    write_citygml(result.model, emit("lod3.gml"));
    write_solid(flatten(result.model), emit("lod3.solid"));
  });

  // evaluate
  const auto gt = stage("evaluate", true, [&] {
    return config.gt_instances.empty() ? std::vector<OpeningInstance>{} : read_instances(config.gt_instances);
  });
  std::optional<BuildingSolid> gt_model;
  if (!config.gt_model.empty()) gt_model = stage("evaluate", true, [&] { return read_solid(config.gt_model); });
  stage("evaluate", false, [&] {
    EvaluationMetrics& m = result.metrics;
    const PolygonMesh shell = result.model.shell();
    m.watertight = watertight(shell);
    if (!config.gt_instances.empty()) {
      const MatchResult match = match_instances(result.instances, gt, config.iou_min);
      m.counts.ao = static_cast<int>(gt.size());
      m.counts.mo = config.measured_openings > 0 ? config.measured_openings : m.counts.ao;
      m.counts.d = static_cast<int>(result.instances.size());
      m.counts.tp = match.tp;
      m.counts.fp = match.fp;
      m.fn = match.fn;
      m.matches = match.matches;
      if (m.counts.ao > 0) {
        m.rates = detection_rates(m.counts);
        result.evaluated = true;
      } else {
        result.warnings.push_back("ground truth has no openings; detection rates not computed");
      }
      m.median_iou = median_instance_iou(match, gt.size());
      m.median_iou_matched = median_instance_iou(match, gt.size(), true);
      m.min_iou_matched = match.matches.empty() ? 0.0 : 1.0;
      for (const auto& mm : match.matches) m.min_iou_matched = std::min(m.min_iou_matched, mm.iou);
    }
    if (gt_model) {
      const auto samples = sample_surface(shell, config.effective_spacing());
      if (!samples.empty()) {
        m.deviation = mesh_deviation(samples, gt_model->mesh());
        m.have_deviation = true;
      }
    }
    text::write_file(emit("metrics.txt"), format_metrics(m));
    text::write_file(emit("report.txt"), format_report(m, result.instances, gt, result.warnings));
  });
  return result;
}

}  // namespace lod3
