#pragma once

// From posterior raster to opening instances: threshold, morphological
// opening, 8-connected clusters, rectangularity percentile filter.
//
// Instances file: `opening face=<id> label=<window|door> conf=<p> rect=<umin vmin umax vmax>`.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lod3/model_io.hpp"
#include "lod3/rasters.hpp"

namespace lod3 {

struct ExtractionConfig {
  double p_high = 0.7;
  int kernel = 3;
  double pe_up = 95.0;
  double pe_lo = 5.0;
  int min_pixels = 4;

  void validate() const;  // ConfigError
};

/// Row-major binary mask.
struct Mask {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> cells;

  Mask() = default;
  Mask(int r, int c) : rows(r), cols(c), cells(static_cast<std::size_t>(r) * c, 0) {}

  bool at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c] != 0; }
  void set(int r, int c, bool v) { cells[static_cast<std::size_t>(r) * cols + c] = v ? 1 : 0; }
  std::size_t count() const;
  friend bool operator==(const Mask&, const Mask&) = default;
};

using Cluster = std::vector<PixelIndex>;  // sorted row-major

/// {pixel : channel value > p_high}.
Mask threshold_mask(const FacadeRaster& posterior, double p_high, int channel = 0);

/// Connected components (8- or 4-connectivity), ordered by (min row, min col).
std::vector<Cluster> connected_components(const Mask& mask, int connectivity = 8);

/// connected_components(threshold_mask(posterior, p_high), 8).
std::vector<Cluster> threshold_clusters(const FacadeRaster& posterior, double p_high);

/// Erosion then dilation by a kernel x kernel square; outside counts as
/// background. `kernel` must be odd.
Mask morphological_opening(const Mask& mask, int kernel);

/// |cluster| / bounding-box area.
double rectangularity(const Cluster& cluster);

/// Linear interpolation between order statistics (q in [0, 100]).
double percentile(std::vector<double> values, double q);

/// min_pixels filter, then keep clusters whose rectangularity lies within
/// [percentile(pe_lo), percentile(pe_up)]; populations of <= 2 are kept.
std::vector<Cluster> filter_instances(const std::vector<Cluster>& clusters, const ExtractionConfig& config);

double instance_confidence(const Cluster& cluster, const FacadeRaster& posterior, int channel = 0);

/// Axis-aligned rectangle in façade UV meters.
struct Rect {
  double umin = 0.0;
  double vmin = 0.0;
  double umax = 0.0;
  double vmax = 0.0;

  double width() const { return umax - umin; }
  double height() const { return vmax - vmin; }
  double area() const { return width() * height(); }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct OpeningInstance {
  std::string face_id;
  Rect rect;
  OpeningLabel label = OpeningLabel::Window;
  double confidence = 0.0;
  Cluster pixels;  // empty when read from file
};

/// Rect = pixel bounding box times cell; label = majority of `labels` (one per
/// member pixel), ties to window.
OpeningInstance cluster_to_opening(const Cluster& cluster, const FacadeFrame& frame,
                                   const std::vector<OpeningLabel>& labels, double confidence);

/// Full chain on one face: threshold, opening, clustering, filtering,
/// confidence and labels from the optional cue maps.
std::vector<OpeningInstance> extract_instances(const FacadeRaster& posterior, const FacadeRaster* pointcloud,
                                               const FacadeRaster* texture, const ExtractionConfig& config);

std::string format_instances(const std::vector<OpeningInstance>& instances);
std::vector<OpeningInstance> parse_instances(std::string_view content);
std::vector<OpeningInstance> read_instances(const std::string& path);
void write_instances(const std::vector<OpeningInstance>& instances, const std::string& path);

}  // namespace lod3
