#pragma once

// Config-driven orchestration of all stages, writing every intermediate to
// the output directory.
//
// Config file: one `key = value` per line, '#' comments, relative paths
// resolved against the config file's directory. See README for the keys.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lod3/errors.hpp"
#include "lod3/evaluate.hpp"
#include "lod3/extraction.hpp"
#include "lod3/occupancy.hpp"
#include "lod3/rasters.hpp"
#include "lod3/reconstruct.hpp"
#include "lod3/visibility.hpp"

namespace lod3 {

struct TextureInput {
  std::string face_id;
  std::string image;  // raw probability raster (face=-)
  std::string corr;   // four image <-> façade correspondences
};

struct PipelineConfig {
  std::string rays;
  std::string solid;
  std::string points;  // optional
  std::vector<TextureInput> textures;
  std::string templates;
  std::string cpt;           // optional; built-in table otherwise
  std::string gt_instances;  // optional; enables detection metrics
  std::string gt_model;      // optional; enables surface deviation
  std::string out_dir = "out";

  OccupancyConfig occupancy;
  UncertaintyConfig uncertainty;
  ExtractionConfig extraction;
  Aggregation conflict_aggregation = Aggregation::Max;
  Aggregation point_aggregation = Aggregation::Max;
  std::optional<double> band_dist;  // default 3 v_s
  double depth = 0.1;
  double iou_min = 0.5;
  TemplateSelection template_selection = TemplateSelection::FirstMatch;
  int measured_openings = 0;  // MO; 0 means MO = AO
  std::optional<double> sample_spacing;  // default v_s

  /// Sets one key from its text value. Relative paths are resolved against
  /// `base_dir`. ConfigError for unknown keys or bad values.
  void set(std::string_view key, std::string_view value, const std::string& base_dir = "");

  /// ConfigError on violated numeric invariants or missing required paths.
  void validate() const;

  double effective_band() const { return band_dist.value_or(3.0 * occupancy.voxel_size); }
  double effective_spacing() const { return sample_spacing.value_or(occupancy.voxel_size); }
};

/// ParseError on malformed lines, ConfigError on unknown or repeated keys
/// (`texture` may repeat).
PipelineConfig parse_pipeline_config(std::string_view content, const std::string& base_dir);

/// Reads and parses; LOD3_OUT_DIR, when set, replaces out_dir.
PipelineConfig read_pipeline_config(const std::string& path);

/// A stage failure. Input errors (unreadable or malformed inputs, bad config)
/// map to exit code 2, everything else to 1.
class StageError : public Error {
 public:
  StageError(std::string stage, bool input_error, const std::string& message)
      : Error("stage " + stage + ": " + message), stage_(std::move(stage)), input_error_(input_error) {}

  const std::string& stage() const noexcept { return stage_; }
  bool input_error() const noexcept { return input_error_; }

 private:
  std::string stage_;
  bool input_error_;
};

struct PipelineResult {
  std::vector<OpeningInstance> instances;  // as extracted
  Lod3Model model;
  bool evaluated = false;  // detection metrics need gt_instances
  EvaluationMetrics metrics;
  std::vector<std::string> warnings;
  std::vector<std::string> artifacts;  // file names written to out_dir
};

/// Validates the config, then runs occupancy, visibility, rasters, fusion,
/// extraction, reconstruct and evaluate. Wall faces only. Instances that
/// cannot be cut are skipped with a warning.
PipelineResult run_pipeline(const PipelineConfig& config);

/// 2 for input and config errors, 1 otherwise.
int exit_code_for(const std::exception& e);

}  // namespace lod3
