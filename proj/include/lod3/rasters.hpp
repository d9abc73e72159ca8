#pragma once

// Façade-plane rasters: the shared grid for conflict, point-cloud, texture and
// posterior maps, plus projection of labelled points and probability images.
//
// Raster file:
//
//   raster face=<id> origin=<x y z> u=<x y z> v=<x y z> cell=<m> rows=<r> cols=<c> channels=<a,b,...>
//   r*c lines of channel values, row-major, row 0 at v = 0
//
// Raw detector images use face=- (null frame); their pixel (row, col) covers
// image coordinates [col, col+1) x [row, row+1).

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lod3/geometry.hpp"
#include "lod3/model_io.hpp"

namespace lod3 {

struct FacadeFrame {
  std::string face_id;  // empty for a null frame
  Point3 origin;
  Vec3 u_axis{1, 0, 0};
  Vec3 v_axis{0, 1, 0};
  double cell = 1.0;
  int width = 0;   // columns
  int height = 0;  // rows

  bool is_null() const { return face_id.empty(); }
  Vec3 normal() const { return cross(u_axis, v_axis); }
  friend bool operator==(const FacadeFrame&, const FacadeFrame&) = default;
};

/// Frame of a face: in-plane basis from plane_basis(normal), origin at the
/// face's minimum UV corner snapped down to the absolute `cell` lattice, so
/// the frame depends on nothing but the face and the cell size.
FacadeFrame make_face_frame(const Face& face, double cell);

FacadeFrame null_frame(int width, int height);

enum class Aggregation { Max, Mean };

std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view s);

class FacadeRaster {
 public:
  FacadeRaster() = default;
  FacadeRaster(FacadeFrame frame, std::vector<std::string> channels);

  const FacadeFrame& frame() const noexcept { return frame_; }
  const std::vector<std::string>& channels() const noexcept { return channels_; }
  int rows() const noexcept { return frame_.height; }
  int cols() const noexcept { return frame_.width; }
  std::size_t channel_count() const noexcept { return channels_.size(); }

  /// -1 if absent.
  int channel_index(std::string_view name) const;

  float at(int row, int col, int channel) const {
    return data_[(static_cast<std::size_t>(row) * frame_.width + col) * channels_.size() + channel];
  }
  float& at(int row, int col, int channel) {
    return data_[(static_cast<std::size_t>(row) * frame_.width + col) * channels_.size() + channel];
  }

  const std::vector<float>& data() const noexcept { return data_; }
  std::vector<float>& data() noexcept { return data_; }

  friend bool operator==(const FacadeRaster&, const FacadeRaster&) = default;

 private:
  FacadeFrame frame_;
  std::vector<std::string> channels_;
  std::vector<float> data_;
};

struct PixelIndex {
  int row = 0;
  int col = 0;
  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

Vec2 world_to_uv(const FacadeFrame& frame, Point3 p);
Point3 uv_to_world(const FacadeFrame& frame, Vec2 uv);

/// Pixel containing `p`, or nullopt when outside the grid or farther than
/// `band_dist` from the frame plane.
std::optional<PixelIndex> world_to_pixel(const FacadeFrame& frame, Point3 p, double band_dist);

inline constexpr std::array<std::string_view, 8> kPointLabels = {
    "arch", "column", "molding", "floor", "door", "window", "wall", "other"};

struct LabeledPoint {
  Point3 position;
  std::array<double, 8> prob{};
};

/// Points file: `x y z p_arch p_column p_molding p_floor p_door p_window p_wall p_other`.
std::vector<LabeledPoint> parse_points(std::string_view content);
std::vector<LabeledPoint> read_points(const std::string& path);
std::string format_points(std::span<const LabeledPoint> points);

/// Raster with one channel per point label. In-band points vote with their
/// full vector; pixels combine votes per channel by `agg`.
FacadeRaster project_point_probabilities(std::span<const LabeledPoint> points, const FacadeFrame& frame,
                                         double band_dist, Aggregation agg = Aggregation::Max);

/// Maps image coordinates (x = column, y = row) to façade UV meters.
class Homography {
 public:
  Homography() = default;
  explicit Homography(std::array<double, 9> h) : h_(h) {}

  Vec2 apply(Vec2 p) const;
  Homography inverse() const;
  const std::array<double, 9>& coefficients() const noexcept { return h_; }

 private:
  std::array<double, 9> h_{1, 0, 0, 0, 1, 0, 0, 0, 1};
};

struct Correspondence {
  Vec2 image;  // x, y in image pixels
  Vec2 uv;     // façade meters
};

/// Direct linear estimate from exactly four pairs, no three collinear on
/// either side; DegenerateCorrespondence otherwise.
Homography estimate_homography(std::span<const Correspondence> pairs);

/// Correspondence file: four lines `corr x y u v`.
std::vector<Correspondence> parse_correspondences(std::string_view content);
std::vector<Correspondence> read_correspondences(const std::string& path);
std::string format_correspondences(std::span<const Correspondence> pairs);

/// Resamples a probability image onto `frame` by nearest neighbour: each
/// target pixel centre goes through the inverse homography into the image.
/// Samples falling outside the image are zero.
FacadeRaster project_image_probabilities(const FacadeRaster& image, std::span<const Correspondence> pairs,
                                         const FacadeFrame& frame);

std::string format_raster(const FacadeRaster& raster);
FacadeRaster parse_raster(std::string_view content);
void write_raster(const FacadeRaster& raster, const std::string& path);
FacadeRaster read_raster(const std::string& path);

}  // namespace lod3
