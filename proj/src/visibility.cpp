#include "lod3/visibility.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lod3/errors.hpp"
#include "lod3/text.hpp"

namespace lod3 {

void UncertaintyConfig::validate() const {
  if (!(sigma_model > 0.0) || !std::isfinite(sigma_model)) throw ConfigError("sigma_model must be > 0");
  if (!(sigma_cloud > 0.0) || !std::isfinite(sigma_cloud)) throw ConfigError("sigma_cloud must be > 0");
  if (!std::isfinite(mu_model) || !std::isfinite(mu_cloud)) throw ConfigError("mu values must be finite");
}

namespace {

// Cross-section of the cube [lo, lo + v_s]^3 with a plane, as a convex ring
// in the (u, v) coordinates of `basis` relative to `origin`.
std::vector<Vec2> cube_section(Point3 lo, double v_s, const Plane& plane, const PlaneBasis& basis, Point3 origin) {
  std::array<Point3, 8> c;
  std::array<double, 8> d{};
  for (int i = 0; i < 8; ++i) {
    c[i] = {lo.x + ((i & 1) ? v_s : 0.0), lo.y + ((i & 2) ? v_s : 0.0), lo.z + ((i & 4) ? v_s : 0.0)};
    d[i] = plane.signed_distance(c[i]);
  }
  std::vector<Point3> hits;
  for (int i = 0; i < 8; ++i)
    if (d[i] == 0.0) hits.push_back(c[i]);
  for (int i = 0; i < 8; ++i) {
    for (int bit : {1, 2, 4}) {
      const int j = i | bit;
      if (j == i) continue;
      if ((d[i] < 0.0 && d[j] > 0.0) || (d[i] > 0.0 && d[j] < 0.0)) {
        hits.push_back(c[i] + (d[i] / (d[i] - d[j])) * (c[j] - c[i]));
      }
    }
  }
  std::vector<Vec2> ring;
  for (const auto& p : hits) {
    const Vec3 q = p - origin;
    ring.push_back({dot(q, basis.u), dot(q, basis.v)});
  }
  if (ring.size() < 3) return {};
  Vec2 centre{};
  for (const auto& p : ring) centre = centre + (1.0 / static_cast<double>(ring.size())) * p;
  std::sort(ring.begin(), ring.end(), [&](Vec2 a, Vec2 b) {
    return std::atan2(a.v - centre.v, a.u - centre.u) < std::atan2(b.v - centre.v, b.u - centre.u);
  });
  return ring;
}

double clipped_area(const std::vector<Vec2>& subject, const std::vector<Vec2>& convex) {
  return std::abs(signed_area_2d(clip_to_convex(subject, convex)));
}

}  // namespace

std::vector<VoxelKey> face_voxels(const Face& face, Point3 grid_origin, double v_s) {
  Plane plane = face.plane();
  const Vec3 n = plane.normal;
  // Tie rule: nudge the plane against its normal so a face on a boundary
  // plane falls into the voxel behind it.
  const double eps = 1e-6 * v_s;
  plane.offset += eps;
  const PlaneBasis basis = plane_basis(n);
  const Point3 origin = face.outer.vertices.front();
  const auto outer = project_ring(face.outer, origin, basis);
  std::vector<std::vector<Vec2>> holes;
  for (const auto& h : face.inner) holes.push_back(project_ring(h, origin, basis));

  constexpr double inf = std::numeric_limits<double>::infinity();
  Point3 lo{inf, inf, inf}, hi{-inf, -inf, -inf};
  for (const auto& p0 : face.outer.vertices) {
    const Point3 p = p0 - eps * n;
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  const VoxelKey kl = key_of(lo, grid_origin, v_s);
  const VoxelKey kh = key_of(hi, grid_origin, v_s);
  const double reach = 0.5 * v_s * (std::abs(n.x) + std::abs(n.y) + std::abs(n.z));
  const double min_area = 1e-9 * v_s * v_s;

  std::vector<VoxelKey> out;
  for (std::int32_t ix = kl.ix - 1; ix <= kh.ix + 1; ++ix)
    for (std::int32_t iy = kl.iy - 1; iy <= kh.iy + 1; ++iy)
      for (std::int32_t iz = kl.iz - 1; iz <= kh.iz + 1; ++iz) {
        const VoxelKey k{ix, iy, iz};
        const Point3 c = voxel_center(k, grid_origin, v_s);
        if (std::abs(plane.signed_distance(c)) >= reach) continue;
        const Point3 corner{grid_origin.x + ix * v_s, grid_origin.y + iy * v_s, grid_origin.z + iz * v_s};
        const auto section = cube_section(corner, v_s, plane, basis, origin);
        if (section.size() < 3) continue;
        double area = clipped_area(outer, section);
        if (area <= min_area) continue;
        for (const auto& h : holes) area -= clipped_area(h, section);
        if (area > min_area) out.push_back(k);
      }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<SurfaceVoxel> surface_voxels(const BuildingSolid& solid, Point3 grid_origin, double v_s) {
  std::vector<SurfaceVoxel> out;
  for (const auto& face : solid.faces)
    for (const auto& k : face_voxels(face, grid_origin, v_s)) out.push_back({k, face.id});
  std::sort(out.begin(), out.end(), [](const SurfaceVoxel& a, const SurfaceVoxel& b) {
    return a.key != b.key ? a.key < b.key : a.face_id < b.face_id;
  });
  return out;
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double positioning_probability(double d, double sigma, double v_s) {
  if (!(sigma > 0.0)) throw DomainError("positioning_probability: sigma must be > 0");
  const double s = sigma * v_s;
  return standard_normal_cdf((d + 0.5 * v_s) / s) - standard_normal_cdf((d - 0.5 * v_s) / s);
}

double positioning_likelihood(double d, double sigma, double v_s) {
  const double peak = positioning_probability(0.0, sigma, v_s);
  return std::clamp(positioning_probability(d, sigma, v_s) / peak, 0.0, 1.0);
}

JointState joint_state_probability(double pA, double pB) {
  const double c = pA * pB;
  return {c, 1.0 - c};
}

std::string_view to_string(SurfaceState s) {
  switch (s) {
    case SurfaceState::Confirmed: return "confirmed";
    case SurfaceState::Conflicted: return "conflicted";
    case SurfaceState::Unknown: return "unknown";
  }
  return "unknown";
}

JointState surface_voxel_probability(double plane_distance, double endpoint_distance, const UncertaintyConfig& u,
                                     double v_s) {
  const double unit = u.absolute_units ? 1.0 / v_s : 1.0;
  const double mu_a = u.mu_model * (u.absolute_units ? 1.0 : v_s);
  const double mu_b = u.mu_cloud * (u.absolute_units ? 1.0 : v_s);
  const double pA = positioning_likelihood(std::abs(plane_distance) - mu_a, u.sigma_model * unit, v_s);
  const double pB = std::isfinite(endpoint_distance)
                        ? positioning_likelihood(endpoint_distance - mu_b, u.sigma_cloud * unit, v_s)
                        : 0.0;
  return joint_state_probability(pA, pB);
}

std::vector<VoxelSurfaceClassification> classify_surface_voxels(const OccupancyTree& tree, const BuildingSolid& solid,
                                                                 const UncertaintyConfig& uncertainty) {
  uncertainty.validate();
  const double v_s = tree.voxel_size();
  const Point3 g = tree.grid_origin();
  const auto voxels = surface_voxels(solid, g, v_s);
  std::map<std::string, Plane, std::less<>> planes;
  for (const auto& f : solid.faces) planes.emplace(f.id, f.plane());

  std::vector<VoxelSurfaceClassification> out(voxels.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(voxels.size()); ++i) {
    const auto& sv = voxels[i];
    VoxelSurfaceClassification c;
    c.key = sv.key;
    c.face_id = sv.face_id;
    const auto rec = tree.find(sv.key);
    if (rec) {
      const auto st = voxel_state(tree, sv.key);
      c.base_state = st.state == OccupancyState::Occupied ? SurfaceState::Confirmed : SurfaceState::Conflicted;
      const double dist = planes.find(sv.face_id)->second.signed_distance(voxel_center(sv.key, g, v_s));
      const JointState j = surface_voxel_probability(dist, rec->endpoint_distance, uncertainty, v_s);
      c.p_confirmed = j.confirmed;
      c.p_conflicted = j.conflicted;
    }
    out[i] = c;
  }
  return out;
}

FacadeRaster project_conflict_map(const std::vector<VoxelSurfaceClassification>& classes, const Face& face,
                                  const FacadeFrame& frame, Point3 grid_origin, double v_s, Aggregation agg) {
  FacadeRaster out(frame, {"conflicted", "confirmed", "unknown"});
  const std::size_t pixels = static_cast<std::size_t>(frame.width) * frame.height;
  std::vector<double> sum_confl(pixels, 0.0), sum_conf(pixels, 0.0);
  std::vector<int> count(pixels, 0);
  std::vector<double> best(pixels, -1.0), best_conf(pixels, 0.0);
  constexpr double no_band = std::numeric_limits<double>::infinity();

  for (const auto& c : classes) {
    if (c.face_id != face.id || c.base_state == SurfaceState::Unknown) continue;
    const auto px = world_to_pixel(frame, voxel_center(c.key, grid_origin, v_s), no_band);
    if (!px) continue;
    const std::size_t i = static_cast<std::size_t>(px->row) * frame.width + px->col;
    ++count[i];
    sum_confl[i] += c.p_conflicted;
    sum_conf[i] += c.p_confirmed;
    if (c.p_conflicted > best[i]) {
      best[i] = c.p_conflicted;
      best_conf[i] = c.p_confirmed;
    }
  }
  auto& data = out.data();
  for (std::size_t i = 0; i < pixels; ++i) {
    if (count[i] == 0) {
      data[i * 3 + 2] = 1.0f;
      continue;
    }
    const double confl = agg == Aggregation::Max ? best[i] : sum_confl[i] / count[i];
    const double conf = agg == Aggregation::Max ? best_conf[i] : sum_conf[i] / count[i];
    data[i * 3 + 0] = static_cast<float>(std::clamp(confl, 0.0, 1.0));
    data[i * 3 + 1] = static_cast<float>(std::clamp(conf, 0.0, 1.0));
  }
  return out;
}

std::string format_classifications(const std::vector<VoxelSurfaceClassification>& classes) {
  std::string out;
  for (const auto& c : classes) {
    out += std::to_string(c.key.ix) + ' ' + std::to_string(c.key.iy) + ' ' + std::to_string(c.key.iz) +
           " face=" + c.face_id + " state=" + std::string(to_string(c.base_state)) +
           " confirmed=" + text::format_double(c.p_confirmed) + " conflicted=" + text::format_double(c.p_conflicted) +
           '\n';
  }
  return out;
}

}  // namespace lod3
