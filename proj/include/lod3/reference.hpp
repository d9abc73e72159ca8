#pragma once

// Serial versions of the OpenMP kernels. Tests compare against them and the
// benchmarks time both; they are not used by the pipeline.

#include <span>
#include <vector>

#include "lod3/evaluate.hpp"
#include "lod3/extraction.hpp"
#include "lod3/fusion.hpp"
#include "lod3/occupancy.hpp"
#include "lod3/rasters.hpp"
#include "lod3/visibility.hpp"

namespace lod3::reference {

/// integrate_ray over `rays` in order.
void integrate_rays(OccupancyTree& tree, std::span<const Ray> rays);

std::vector<VoxelSurfaceClassification> classify_surface_voxels(const OccupancyTree& tree, const BuildingSolid& solid,
                                                                 const UncertaintyConfig& uncertainty);

FacadeRaster project_point_probabilities(std::span<const LabeledPoint> points, const FacadeFrame& frame,
                                         double band_dist, Aggregation agg = Aggregation::Max);

FacadeRaster fuse_maps(const FacadeRaster* conflict, const FacadeRaster* pointcloud, const FacadeRaster* texture,
                       const Cpt& cpt);

/// Direct kernel x kernel window scan, no separability.
Mask morphological_opening(const Mask& mask, int kernel);

Deviation mesh_deviation(std::span<const Point3> samples, const PolygonMesh& mesh);

}  // namespace lod3::reference
