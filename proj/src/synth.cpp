#include "lod3/synth.hpp"

#include <cmath>
#include <filesystem>
#include <random>

#include "lod3/errors.hpp"
#include "lod3/reconstruct.hpp"
#include "lod3/text.hpp"

namespace lod3 {

SynthSpec SynthSpec::defaults() {
  SynthSpec s;
  s.openings = {
      {OpeningLabel::Window, {1.0, 1.0, 2.2, 2.5}},
      {OpeningLabel::Window, {6.0, 1.0, 7.2, 2.5}},
      {OpeningLabel::Door, {3.8, 0.3, 5.0, 2.6}},
  };
  return s;
}

void SynthSpec::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw SpecError(std::string(what) + " must be > 0");
  };
  positive(wall_width, "wall_width");
  positive(wall_height, "wall_height");
  positive(building_depth, "building_depth");
  positive(sensor_distance, "sensor_distance");
  positive(backplane_offset, "backplane_offset");
  positive(ray_density, "ray_density");
  positive(image_px_per_m, "image_px_per_m");
  positive(voxel_size, "voxel_size");
  positive(cut_depth, "cut_depth");
  if (!(noise_sigma >= 0.0)) throw SpecError("noise_sigma must be >= 0");
  if (!(glass_density >= 0.0)) throw SpecError("glass_density must be >= 0");
  if (!(backplane_offset < building_depth)) throw SpecError("backplane must lie inside the building");
  for (std::size_t i = 0; i < openings.size(); ++i) {
    const Rect& r = openings[i].rect;
    if (!(r.umin < r.umax && r.vmin < r.vmax)) throw SpecError("opening " + std::to_string(i) + " is empty");
    // Cuts need one free cell between an opening and the wall outline.
    if (r.umin < voxel_size || r.vmin < voxel_size || r.umax > wall_width - voxel_size ||
        r.vmax > wall_height - voxel_size)
      throw SpecError("opening " + std::to_string(i) + " is not inside the wall");
    for (std::size_t j = 0; j < i; ++j) {
      const Rect& o = openings[j].rect;
      if (r.umin < o.umax && o.umin < r.umax && r.vmin < o.vmax && o.vmin < r.vmax)
        throw SpecError("openings " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
    }
  }
}

namespace {

BuildingSolid box_solid(const SynthSpec& s) {
  const double x0 = 0.0, x1 = s.wall_width;
  const double y0 = s.wall_y, y1 = s.wall_y + s.building_depth;
  const double z0 = 0.0, z1 = s.wall_height;
  auto face = [](std::string id, SurfaceLabel label, std::vector<Point3> v) {
    return Face{std::move(id), Ring{std::move(v)}, {}, label};
  };
  BuildingSolid b;
  b.id = "synthetic_building";
  b.lod = 2;
  b.faces = {
      face(kSynthFrontFace, SurfaceLabel::Wall, {{x0, y0, z0}, {x1, y0, z0}, {x1, y0, z1}, {x0, y0, z1}}),
      face("wall_back", SurfaceLabel::Wall, {{x0, y1, z0}, {x0, y1, z1}, {x1, y1, z1}, {x1, y1, z0}}),
      face("wall_left", SurfaceLabel::Wall, {{x0, y0, z0}, {x0, y0, z1}, {x0, y1, z1}, {x0, y1, z0}}),
      face("wall_right", SurfaceLabel::Wall, {{x1, y0, z0}, {x1, y1, z0}, {x1, y1, z1}, {x1, y0, z1}}),
      face("ground", SurfaceLabel::Ground, {{x0, y0, z0}, {x0, y1, z0}, {x1, y1, z0}, {x1, y0, z0}}),
      face("roof", SurfaceLabel::Roof, {{x0, y0, z1}, {x1, y0, z1}, {x1, y1, z1}, {x0, y1, z1}}),
  };
  return b;
}

const SynthOpening* opening_at(const SynthSpec& s, double u, double v) {
  for (const auto& o : s.openings)
    if (u > o.rect.umin && u < o.rect.umax && v > o.rect.vmin && v < o.rect.vmax) return &o;
  return nullptr;
}

LabeledPoint labelled(Point3 p, std::size_t main) {
  LabeledPoint lp;
  lp.position = p;
  lp.prob.fill(0.01);
  lp.prob[main] = 0.93;
  return lp;
}

std::size_t label_slot(std::string_view name) {
  for (std::size_t i = 0; i < kPointLabels.size(); ++i)
    if (kPointLabels[i] == name) return i;
  return kPointLabels.size() - 1;
}

std::size_t opening_slot(OpeningLabel l) { return label_slot(l == OpeningLabel::Door ? "door" : "window"); }

}  // namespace

SynthScene synth_scene(const SynthSpec& spec) {
  spec.validate();
  SynthScene scene;
  scene.solid = box_solid(spec);

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noise = [&]() {
    if (spec.noise_sigma == 0.0) return Vec3{};
    const double a = gauss(rng), b = gauss(rng), c = gauss(rng);
    return spec.noise_sigma * Vec3{a, b, c};
  };

  const std::size_t wall_slot = label_slot("wall");
  const std::size_t other_slot = label_slot("other");
  const auto n_rays = static_cast<std::size_t>(std::llround(spec.ray_density * spec.wall_width * spec.wall_height));
  const double sensor_y = spec.wall_y - spec.sensor_distance;
  const double back_y = spec.wall_y + spec.backplane_offset;
  scene.rays.reserve(n_rays);
  for (std::size_t i = 0; i < n_rays; ++i) {
    const double u = unit(rng) * spec.wall_width;
    const double v = unit(rng) * spec.wall_height;
    const double sx = u + (2.0 * unit(rng) - 1.0) * spec.sensor_spread;
    const Point3 sensor{sx, sensor_y, spec.sensor_height};
    const Point3 target{u, spec.wall_y, v};
    const SynthOpening* o = opening_at(spec, u, v);
    Point3 end = target;
    std::size_t slot = wall_slot;
    if (o != nullptr && o->see_through) {
      const double t = (back_y - sensor.y) / (target.y - sensor.y);
      end = sensor + t * (target - sensor);
      slot = other_slot;
    } else if (o != nullptr && o->pc_cue) {
      slot = opening_slot(o->label);
    }
    end = end + noise();
    scene.rays.push_back({sensor, end});
    scene.points.push_back(labelled(end, slot));
  }
  // Labelled returns from glass or blinds on a jittered grid (one per
  // stratum), like a scan pattern, so no façade cell inside an opening goes
  // without a cue point.
  for (const auto& o : spec.openings) {
    if (!o.pc_cue || spec.glass_density == 0.0) continue;
    const double step = 1.0 / std::sqrt(spec.glass_density);
    const auto nu = static_cast<int>(std::ceil(o.rect.width() / step));
    const auto nv = static_cast<int>(std::ceil(o.rect.height() / step));
    const double su = o.rect.width() / nu, sv = o.rect.height() / nv;
    for (int j = 0; j < nv; ++j)
      for (int i = 0; i < nu; ++i) {
        const double u = o.rect.umin + (i + unit(rng)) * su;
        const double v = o.rect.vmin + (j + unit(rng)) * sv;
        scene.points.push_back(labelled(Point3{u, spec.wall_y, v} + noise(), opening_slot(o.label)));
      }
  }

  // Oblique street-level photo: wall corners at a mild keystone.
  const double px = spec.image_px_per_m;
  const double margin = 0.5 * px;
  const double keystone = 0.25 * px;
  const int width = static_cast<int>(std::ceil(spec.wall_width * px + 2.0 * margin));
  const int height = static_cast<int>(std::ceil(spec.wall_height * px + 2.0 * margin));
  const double right = width - margin;
  const double bottom = height - margin;
  scene.correspondences = {
      {{margin, bottom}, {0.0, 0.0}},
      {{right, bottom}, {spec.wall_width, 0.0}},
      {{right - keystone, margin}, {spec.wall_width, spec.wall_height}},
      {{margin + keystone, margin}, {0.0, spec.wall_height}},
  };
  const Homography to_uv = estimate_homography(scene.correspondences);
  scene.texture = FacadeRaster(null_frame(width, height), {"window", "door"});
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const Vec2 uv = to_uv.apply({c + 0.5, r + 0.5});
      const SynthOpening* o = opening_at(spec, uv.u, uv.v);
      const bool marked = o != nullptr && o->tex_cue;
      scene.texture.at(r, c, 0) = marked && o->label == OpeningLabel::Window ? 0.95f : 0.02f;
      scene.texture.at(r, c, 1) = marked && o->label == OpeningLabel::Door ? 0.95f : 0.02f;
    }

  for (const auto& o : spec.openings) {
    OpeningInstance inst;
    inst.face_id = kSynthFrontFace;
    inst.rect = o.rect;
    inst.label = o.label;
    inst.confidence = 1.0;
    scene.gt_instances.push_back(inst);
  }
  scene.templates = {flat_panel_template("flat_window", OpeningLabel::Window),
                     flat_panel_template("flat_door", OpeningLabel::Door)};
  scene.gt_lod3 = flatten(reconstruct_lod3(scene.solid, scene.gt_instances, scene.templates, spec.cut_depth,
                                           spec.voxel_size));
  scene.gt_lod3.id = "synthetic_building_gt";
  return scene;
}

std::string write_synth_scene(const SynthScene& scene, const SynthSpec& spec, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  const fs::path d(dir);
  text::write_file((d / "rays.txt").string(), format_rays(scene.rays));
  write_solid(scene.solid, (d / "solid.txt").string());
  text::write_file((d / "points.txt").string(), format_points(scene.points));
  write_raster(scene.texture, (d / "texture.raster").string());
  text::write_file((d / "texture.corr").string(), format_correspondences(scene.correspondences));
  write_template_library(scene.templates, (d / "templates.txt").string());
  write_instances(scene.gt_instances, (d / "gt_instances.txt").string());
  write_solid(scene.gt_lod3, (d / "gt_lod3.solid").string());

  std::string cfg = "# synthetic scene, seed " + std::to_string(spec.seed) + "\n";
  cfg += "rays = rays.txt\n";
  cfg += "solid = solid.txt\n";
  cfg += "points = points.txt\n";
  cfg += std::string("texture = ") + kSynthFrontFace + " texture.raster texture.corr\n";
  cfg += "templates = templates.txt\n";
  cfg += "gt_instances = gt_instances.txt\n";
  cfg += "gt_model = gt_lod3.solid\n";
  cfg += "out_dir = out\n";
  cfg += "vs = " + text::format_double(spec.voxel_size) + "\n";
  cfg += "depth = " + text::format_double(spec.cut_depth) + "\n";
  const std::string cfg_path = (d / "pipeline.cfg").string();
  text::write_file(cfg_path, cfg);
  return cfg_path;
}

}  // namespace lod3
