#pragma once

// Probabilistic occupancy from laser rays: clamped log-odds updates stored in
// a sparse octree of voxels of edge length v_s.

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lod3/geometry.hpp"

namespace lod3 {

struct Ray {
  Point3 origin;    // sensor position
  Point3 endpoint;  // hit point
};

struct VoxelKey {
  std::int32_t ix = 0;
  std::int32_t iy = 0;
  std::int32_t iz = 0;

  friend constexpr auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

struct OccupancyConfig {
  double voxel_size = 0.1;
  double prior = 0.5;
  double l_min = -2.0;
  double l_max = 3.5;
  double l_hit = 0.85;
  double l_miss = -0.4;
  double occ_threshold = 0.5;
  double max_range = 100.0;

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

/// ln(p / (1 - p)); DomainError unless 0 < p < 1.
double log_odds(double p);
double probability_from_log_odds(double l);

/// max(min(current + increment, l_max), l_min)
double clamped_update(double current, double increment, double l_min, double l_max);

/// Voxel boundary plane k along one axis: grid_origin + k * v_s. Both the
/// traversal and key computation go through this.
inline double voxel_boundary(double grid_origin, std::int64_t k, double v_s) {
  return grid_origin + static_cast<double>(k) * v_s;
}

VoxelKey key_of(Point3 p, Point3 grid_origin, double v_s);
Point3 voxel_center(VoxelKey key, Point3 grid_origin, double v_s);

/// Floor of `bbox_min` to a multiple of v_s, componentwise.
Point3 aligned_grid_origin(Point3 bbox_min, double v_s);

/// Voxels whose interior the open segment (origin, endpoint) crosses with
/// positive length, by increasing ray parameter, minus the endpoint's voxel.
std::vector<VoxelKey> traverse_voxels(Point3 origin, Point3 endpoint, Point3 grid_origin, double v_s);

/// Per-voxel state kept in the tree.
struct VoxelRecord {
  double log_odds = 0.0;
  /// Smallest distance from the voxel centre to the endpoint of any ray that
  /// touched the voxel (along the ray for pass-through rays).
  double endpoint_distance = 0.0;

  friend bool operator==(const VoxelRecord&, const VoxelRecord&) = default;
};

/// Sparse octree over VoxelKey with 16 levels (keys in [-32768, 32767]).
class OccupancyTree {
 public:
  static constexpr int kDepth = 16;
  static constexpr std::int32_t kKeyOffset = 1 << (kDepth - 1);

  OccupancyTree(OccupancyConfig config, Point3 grid_origin);

  const OccupancyConfig& config() const noexcept { return config_; }
  Point3 grid_origin() const noexcept { return grid_origin_; }
  double voxel_size() const noexcept { return config_.voxel_size; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  std::optional<VoxelRecord> find(VoxelKey key) const;

  /// Applies one clamped log-odds increment (starting from the prior for new
  /// voxels) and folds `endpoint_distance` into the running minimum.
  void update(VoxelKey key, double increment, double endpoint_distance);

  /// Overwrites a voxel; the value must already satisfy the clamp band.
  void set(VoxelKey key, const VoxelRecord& record);

  /// All stored voxels sorted by key.
  std::vector<std::pair<VoxelKey, VoxelRecord>> leaves() const;

  static bool in_range(VoxelKey key);

 private:
  struct Node {
    std::array<std::int32_t, 8> child;
  };

  std::int32_t* slot_for(VoxelKey key, bool create);
  const std::int32_t* find_slot(VoxelKey key) const;

  OccupancyConfig config_;
  Point3 grid_origin_;
  std::vector<Node> nodes_;
  std::vector<VoxelRecord> records_;
  std::vector<VoxelKey> record_keys_;
};

/// Single-ray update: traversed voxels get l_miss, the endpoint voxel l_hit.
/// Rays longer than max_range are truncated and only produce misses.
void integrate_ray(OccupancyTree& tree, const Ray& ray);

/// Parallel batch integration; the resulting tree is identical to
/// integrating `rays` one by one in order.
void integrate_rays(OccupancyTree& tree, std::span<const Ray> rays);

enum class OccupancyState { Unknown, Empty, Occupied };

struct VoxelStateResult {
  OccupancyState state = OccupancyState::Unknown;
  double probability = 0.5;
};

VoxelStateResult voxel_state(const OccupancyTree& tree, VoxelKey key);

std::string_view to_string(OccupancyState s);

/// Rays file: `sx sy sz px py pz` per line, '#' comments. Zero-length rays
/// are a ParseError.
std::vector<Ray> parse_rays(std::string_view content);
std::vector<Ray> read_rays(const std::string& path);
std::string format_rays(std::span<const Ray> rays);

/// Reads `rays_path`, derives the grid origin from the rays' bounding box
/// (optionally extended by `extra_bbox`), and integrates all rays.
OccupancyTree build_occupancy(const std::string& rays_path, const OccupancyConfig& config,
                              std::span<const Point3> extra_bbox = {});

/// Bounding-box-aligned grid origin for rays plus extra points.
Point3 grid_origin_for(std::span<const Ray> rays, std::span<const Point3> extra, double v_s);

/// Occupancy file: header line then `ix iy iz log_odds endpoint_distance`.
std::string format_occupancy(const OccupancyTree& tree);
OccupancyTree parse_occupancy(std::string_view content);
void write_occupancy(const OccupancyTree& tree, const std::string& path);
OccupancyTree read_occupancy(const std::string& path);

}  // namespace lod3
