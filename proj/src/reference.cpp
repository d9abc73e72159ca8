#include "lod3/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "lod3/errors.hpp"

namespace lod3::reference {

void integrate_rays(OccupancyTree& tree, std::span<const Ray> rays) {
  for (const auto& r : rays) integrate_ray(tree, r);
}

std::vector<VoxelSurfaceClassification> classify_surface_voxels(const OccupancyTree& tree, const BuildingSolid& solid,
                                                                 const UncertaintyConfig& uncertainty) {
  uncertainty.validate();
  const double v_s = tree.voxel_size();
  const Point3 g = tree.grid_origin();
  std::map<std::string, Plane> planes;
  for (const auto& f : solid.faces) planes.emplace(f.id, f.plane());
  std::vector<VoxelSurfaceClassification> out;
  for (const auto& sv : surface_voxels(solid, g, v_s)) {
    VoxelSurfaceClassification c;
    c.key = sv.key;
    c.face_id = sv.face_id;
    if (const auto rec = tree.find(sv.key)) {
      const bool occupied = voxel_state(tree, sv.key).state == OccupancyState::Occupied;
      c.base_state = occupied ? SurfaceState::Confirmed : SurfaceState::Conflicted;
      const double dist = planes.at(sv.face_id).signed_distance(voxel_center(sv.key, g, v_s));
      const JointState j = surface_voxel_probability(dist, rec->endpoint_distance, uncertainty, v_s);
      c.p_confirmed = j.confirmed;
      c.p_conflicted = j.conflicted;
    }
    out.push_back(c);
  }
  return out;
}

FacadeRaster project_point_probabilities(std::span<const LabeledPoint> points, const FacadeFrame& frame,
                                         double band_dist, Aggregation agg) {
  FacadeRaster out(frame, std::vector<std::string>(kPointLabels.begin(), kPointLabels.end()));
  const std::size_t pixels = static_cast<std::size_t>(frame.width) * frame.height;
  std::vector<double> acc(pixels * 8, 0.0);
  std::vector<int> count(pixels, 0);
  for (const auto& p : points) {
    const auto px = world_to_pixel(frame, p.position, band_dist);
    if (!px) continue;
    const std::size_t i = static_cast<std::size_t>(px->row) * frame.width + px->col;
    ++count[i];
    for (int c = 0; c < 8; ++c) acc[i * 8 + c] = agg == Aggregation::Max ? std::max(acc[i * 8 + c], p.prob[c])
                                                                         : acc[i * 8 + c] + p.prob[c];
  }
  for (std::size_t i = 0; i < pixels; ++i) {
    if (count[i] == 0) continue;
    for (int c = 0; c < 8; ++c) {
      double v = acc[i * 8 + c];
      if (agg == Aggregation::Mean) v /= count[i];
      out.data()[i * 8 + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

FacadeRaster fuse_maps(const FacadeRaster* conflict, const FacadeRaster* pointcloud, const FacadeRaster* texture,
                       const Cpt& cpt) {
  const FacadeRaster* first = conflict ? conflict : (pointcloud ? pointcloud : texture);
  if (first == nullptr) throw FrameMismatch("no input maps");
  for (const FacadeRaster* r : {conflict, pointcloud, texture})
    if (r && !(r->frame() == first->frame())) throw FrameMismatch("fusion inputs do not share one façade frame");
  FacadeRaster out(first->frame(), {"opening"});
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c)
      out.at(r, c, 0) = static_cast<float>(pixel_posterior(pixel_evidence(conflict, pointcloud, texture, r, c), cpt));
  return out;
}

Mask morphological_opening(const Mask& mask, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw DomainError("morphological kernel must be odd and >= 1");
  const int k = kernel / 2;
  auto pass = [&](const Mask& in, bool erode) {
    Mask out(in.rows, in.cols);
    for (int r = 0; r < in.rows; ++r)
      for (int c = 0; c < in.cols; ++c) {
        bool v = erode;
        for (int dr = -k; dr <= k; ++dr)
          for (int dc = -k; dc <= k; ++dc) {
            const int rr = r + dr, cc = c + dc;
            const bool s = rr >= 0 && cc >= 0 && rr < in.rows && cc < in.cols && in.at(rr, cc);
            v = erode ? (v && s) : (v || s);
          }
        out.set(r, c, v);
      }
    return out;
  };
  return pass(pass(mask, true), false);
}

Deviation mesh_deviation(std::span<const Point3> samples, const PolygonMesh& mesh) {
  if (samples.empty() || mesh.empty()) throw DomainError("mesh_deviation needs samples and faces");
  Deviation d;
  double sum = 0.0, sq = 0.0;
  for (const auto& p : samples) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& poly : mesh) best = std::min(best, point_polygon_distance(p, poly));
    sum += best;
    sq += best * best;
    d.max = std::max(d.max, best);
  }
  d.mean = sum / static_cast<double>(samples.size());
  d.rms = std::sqrt(sq / static_cast<double>(samples.size()));
  return d;
}

}  // namespace lod3::reference
