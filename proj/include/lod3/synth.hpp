#pragma once

// Synthetic box building with a street-side scanner: the oracle scene for the
// end-to-end tests.

#include <cstdint>
#include <string>
#include <vector>

#include "lod3/extraction.hpp"
#include "lod3/model_io.hpp"
#include "lod3/occupancy.hpp"
#include "lod3/rasters.hpp"

namespace lod3 {

struct SynthOpening {
  OpeningLabel label = OpeningLabel::Window;
  Rect rect;                 // in the front wall's UV frame (u = x, v = z)
  bool see_through = true;   // false: rays stop at the wall plane (closed blinds)
  bool pc_cue = true;        // points inside carry the opening label
  bool tex_cue = true;       // texture image marks the opening
};

struct SynthSpec {
  double wall_width = 10.0;
  double wall_height = 4.0;
  double building_depth = 8.0;
  double wall_y = 0.05;            // front wall plane
  double sensor_distance = 6.0;    // scanner line at wall_y - sensor_distance
  double sensor_height = 2.0;
  double sensor_spread = 3.0;      // scanner x offset in [-spread, spread] around the target
  double backplane_offset = 2.0;   // interior reflector behind see-through openings
  double ray_density = 400.0;      // rays per m^2 of wall
  double glass_density = 400.0;    // labelled points per m^2 on openings with a point cue
  double noise_sigma = 0.02;       // 3D Gaussian endpoint noise, meters
  double image_px_per_m = 20.0;
  double voxel_size = 0.1;
  double cut_depth = 0.1;
  std::uint64_t seed = 42;
  std::vector<SynthOpening> openings;

  /// Two windows and a door on the default 10 m x 4 m wall.
  static SynthSpec defaults();

  /// SpecError on invalid extents or overlapping / out-of-wall openings.
  void validate() const;
};

inline constexpr const char* kSynthFrontFace = "wall_front";

struct SynthScene {
  BuildingSolid solid;                  // LoD2 prior
  std::vector<Ray> rays;
  std::vector<LabeledPoint> points;
  FacadeRaster texture;                 // raw image, channels window, door
  std::vector<Correspondence> correspondences;
  std::vector<OpeningInstance> gt_instances;
  std::vector<OpeningTemplate> templates;
  BuildingSolid gt_lod3;                // flattened ground-truth LoD3 solid
};

SynthScene synth_scene(const SynthSpec& spec);

/// Writes rays.txt, solid.txt, points.txt, texture.raster, texture.corr,
/// templates.txt, gt_instances.txt, gt_lod3.solid and pipeline.cfg into
/// `dir` (created if missing). Returns the config path.
std::string write_synth_scene(const SynthScene& scene, const SynthSpec& spec, const std::string& dir);

}  // namespace lod3
