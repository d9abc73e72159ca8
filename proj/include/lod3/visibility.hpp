#pragma once

// Surface voxels of the prior solid, classified confirmed / conflicted /
// unknown against the occupancy tree, and their projection to a façade map.

#include <string>
#include <vector>

#include "lod3/model_io.hpp"
#include "lod3/occupancy.hpp"
#include "lod3/rasters.hpp"

namespace lod3 {

struct UncertaintyConfig {
  double mu_model = 0.0;
  double sigma_model = 3.0;
  double mu_cloud = 0.0;
  double sigma_cloud = 2.85;
  /// When false (default) the four values are multiples of v_s.
  bool absolute_units = false;

  void validate() const;  // ConfigError
};

struct SurfaceVoxel {
  VoxelKey key;
  std::string face_id;
  friend bool operator==(const SurfaceVoxel&, const SurfaceVoxel&) = default;
};

/// Voxels whose closed cube meets `face` in a region of positive area. A face
/// lying exactly on a voxel boundary plane goes to the voxel on the side the
/// normal points away from. Sorted by key.
std::vector<VoxelKey> face_voxels(const Face& face, Point3 grid_origin, double v_s);

/// face_voxels of every face, sorted by (key, face id).
std::vector<SurfaceVoxel> surface_voxels(const BuildingSolid& solid, Point3 grid_origin, double v_s);

double standard_normal_cdf(double x);

/// Gaussian mass within one voxel slab around distance d:
/// Phi((d + v_s/2)/(sigma v_s)) - Phi((d - v_s/2)/(sigma v_s)). `sigma` is in
/// multiples of v_s. DomainError if sigma <= 0.
double positioning_probability(double d, double sigma, double v_s);

/// positioning_probability(d) / positioning_probability(0): 1 at zero
/// distance, falling to 0 in the tails. Used as P(A) and P(B).
double positioning_likelihood(double d, double sigma, double v_s);

struct JointState {
  double confirmed = 0.0;
  double conflicted = 1.0;
};

/// Product law and its complement.
JointState joint_state_probability(double pA, double pB);

enum class SurfaceState { Confirmed, Conflicted, Unknown };

std::string_view to_string(SurfaceState s);

struct VoxelSurfaceClassification {
  VoxelKey key;
  std::string face_id;
  double p_confirmed = 0.0;
  double p_conflicted = 0.0;
  SurfaceState base_state = SurfaceState::Unknown;

  friend bool operator==(const VoxelSurfaceClassification&, const VoxelSurfaceClassification&) = default;
};

/// Evidence for one measured surface voxel: P(A) from the voxel centre's
/// distance to the face plane, P(B) from the voxel's stored endpoint distance.
JointState surface_voxel_probability(double plane_distance, double endpoint_distance,
                                     const UncertaintyConfig& u, double v_s);

/// Classifies every surface voxel of the solid; output sorted by (key, face).
std::vector<VoxelSurfaceClassification> classify_surface_voxels(const OccupancyTree& tree, const BuildingSolid& solid,
                                                                 const UncertaintyConfig& uncertainty);

/// Conflict map of one face on `frame` (channels conflicted, confirmed,
/// unknown). Measured voxels take precedence over unknown ones; several
/// measured voxels per pixel combine by `agg` (Max picks the voxel with the
/// largest p_conflicted).
FacadeRaster project_conflict_map(const std::vector<VoxelSurfaceClassification>& classes, const Face& face,
                                  const FacadeFrame& frame, Point3 grid_origin, double v_s,
                                  Aggregation agg = Aggregation::Max);

/// One line per voxel: `ix iy iz face=<id> state=<s> confirmed=<p> conflicted=<p>`.
std::string format_classifications(const std::vector<VoxelSurfaceClassification>& classes);

}  // namespace lod3
