#include "lod3/geometry.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <unordered_map>

#include "lod3/text.hpp"

namespace lod3 {

Polygon polygon_from_triangle(const Triangle& t) {
  return Polygon{Ring{{t.v[0], t.v[1], t.v[2]}}, {}};
}

Vec3 area_vector(const Ring& ring) {
  Vec3 acc{};
  const auto& vs = ring.vertices;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    acc = acc + cross(vs[i], vs[(i + 1) % vs.size()]);
  }
  return 0.5 * acc;
}

Vec3 area_vector(const Polygon& polygon) {
  Vec3 acc = area_vector(polygon.outer);
  for (const auto& hole : polygon.holes) acc = acc + area_vector(hole);
  return acc;
}

Plane fit_plane(const Ring& ring) {
  Plane plane;
  if (ring.vertices.size() < 3) return plane;
  // Newell normal is translation invariant; centre first for precision.
  Point3 centroid{};
  for (const auto& p : ring.vertices) centroid = centroid + p;
  centroid = centroid / static_cast<double>(ring.vertices.size());
  Vec3 n{};
  const auto& vs = ring.vertices;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    n = n + cross(vs[i] - centroid, vs[(i + 1) % vs.size()] - centroid);
  }
  const double len = norm(n);
  if (!(len > 0.0)) return plane;
  plane.normal = n / len;
  plane.offset = -dot(plane.normal, centroid);
  return plane;
}

double max_plane_deviation(const Polygon& polygon, const Plane& plane) {
  double worst = 0.0;
  for (const auto& p : polygon.outer.vertices) worst = std::max(worst, std::abs(plane.signed_distance(p)));
  for (const auto& hole : polygon.holes)
    for (const auto& p : hole.vertices) worst = std::max(worst, std::abs(plane.signed_distance(p)));
  return worst;
}

PlaneBasis plane_basis(Vec3 normal) {
  PlaneBasis b;
  b.n = normal;
  const Vec3 up = std::abs(normal.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{0, 1, 0};
  b.v = normalized(up - dot(up, normal) * normal);
  b.u = cross(b.v, normal);
  return b;
}

std::vector<Vec2> project_ring(const Ring& ring, Point3 origin, const PlaneBasis& basis) {
  std::vector<Vec2> out;
  out.reserve(ring.vertices.size());
  for (const auto& p : ring.vertices) {
    const Vec3 d = p - origin;
    out.push_back({dot(d, basis.u), dot(d, basis.v)});
  }
  return out;
}

double signed_area_2d(std::span<const Vec2> ring) {
  double a = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) a += cross2(ring[i], ring[(i + 1) % ring.size()]);
  return 0.5 * a;
}

namespace {

double point_segment_distance_2d(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.u * ab.u + ab.v * ab.v;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.u - a.u) * ab.u + (p.v - a.v) * ab.v) / len2, 0.0, 1.0);
  const Vec2 q = a + t * ab;
  return std::hypot(p.u - q.u, p.v - q.v);
}

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross2(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.u, b.u) <= p.u && p.u <= std::max(a.u, b.u) && std::min(a.v, b.v) <= p.v &&
         p.v <= std::max(a.v, b.v);
}

}  // namespace

PointLocation locate_point(Vec2 p, std::span<const Vec2> ring, double eps) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (point_segment_distance_2d(p, ring[i], ring[(i + 1) % n]) <= eps) return PointLocation::Boundary;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = ring[i];
    const Vec2 b = ring[j];
    if ((a.v > p.v) != (b.v > p.v)) {
      const double x = (b.u - a.u) * (p.v - a.v) / (b.v - a.v) + a.u;
      if (p.u < x) inside = !inside;
    }
  }
  return inside ? PointLocation::Inside : PointLocation::Outside;
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

std::vector<Vec2> clip_to_convex(std::span<const Vec2> subject, std::span<const Vec2> convex_ccw) {
  std::vector<Vec2> output(subject.begin(), subject.end());
  const std::size_t m = convex_ccw.size();
  for (std::size_t e = 0; e < m && !output.empty(); ++e) {
    const Vec2 a = convex_ccw[e];
    const Vec2 b = convex_ccw[(e + 1) % m];
    const Vec2 edge = b - a;
    auto side = [&](Vec2 p) { return cross2(edge, p - a); };
    std::vector<Vec2> input;
    input.swap(output);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2 cur = input[i];
      const Vec2 prev = input[(i + input.size() - 1) % input.size()];
      const double sc = side(cur);
      const double sp = side(prev);
      if (sc >= 0.0) {
        if (sp < 0.0) output.push_back(prev + (sp / (sp - sc)) * (cur - prev));
        output.push_back(cur);
      } else if (sp >= 0.0) {
        output.push_back(prev + (sp / (sp - sc)) * (cur - prev));
      }
    }
  }
  return output;
}

double enclosed_volume(std::span<const Polygon> mesh) {
  double v = 0.0;
  for (const auto& poly : mesh) {
    if (poly.outer.vertices.empty()) continue;
    v += dot(poly.outer.vertices.front(), area_vector(poly));
  }
  return v / 3.0;
}

double polygon_area(const Polygon& polygon) { return norm(area_vector(polygon)); }

double point_segment_distance(Point3 p, Point3 a, Point3 b) {
  const Vec3 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

double point_polygon_distance(Point3 p, const Polygon& polygon) {
  const Plane plane = fit_plane(polygon.outer);
  const double h = plane.signed_distance(p);
  const Point3 origin = polygon.outer.vertices.front();
  const PlaneBasis basis = plane_basis(plane.normal);
  const Vec3 d = p - origin;
  const Vec2 q{dot(d, basis.u), dot(d, basis.v)};

  bool inside = locate_point(q, project_ring(polygon.outer, origin, basis)) != PointLocation::Outside;
  if (inside) {
    for (const auto& hole : polygon.holes) {
      if (locate_point(q, project_ring(hole, origin, basis)) == PointLocation::Inside) {
        inside = false;
        break;
      }
    }
  }
  if (inside) return std::abs(h);

  double best = std::numeric_limits<double>::infinity();
  auto ring_edges = [&](const Ring& ring) {
    const auto& vs = ring.vertices;
    for (std::size_t i = 0; i < vs.size(); ++i)
      best = std::min(best, point_segment_distance(p, vs[i], vs[(i + 1) % vs.size()]));
  };
  ring_edges(polygon.outer);
  for (const auto& hole : polygon.holes) ring_edges(hole);
  return best;
}

namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

class VertexWelder {
 public:
  explicit VertexWelder(double tol) : tol_(tol) {}

  int id(Point3 p) {
    const CellKey c{cell(p.x), cell(p.y), cell(p.z)};
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = grid_.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == grid_.end()) continue;
          for (int candidate : it->second) {
            if (norm(points_[candidate] - p) <= tol_) return candidate;
          }
        }
    const int next = static_cast<int>(points_.size());
    points_.push_back(p);
    grid_[c].push_back(next);
    return next;
  }

  Point3 point(int id) const { return points_[id]; }

 private:
  std::int64_t cell(double v) const { return static_cast<std::int64_t>(std::floor(v / tol_)); }

  double tol_;
  std::vector<Point3> points_;
  std::unordered_map<CellKey, std::vector<int>, CellHash> grid_;
};

}  // namespace

EdgeReport analyze_edges(std::span<const Polygon> mesh, double weld_tol) {
  VertexWelder welder(weld_tol);
  struct Uses {
    int forward = 0;   // a→b with a < b
    int backward = 0;  // b→a
  };
  std::map<std::pair<int, int>, Uses> edges;
  auto add_ring = [&](const Ring& ring) {
    const auto& vs = ring.vertices;
    std::vector<int> ids;
    ids.reserve(vs.size());
    for (const auto& p : vs) ids.push_back(welder.id(p));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int a = ids[i];
      const int b = ids[(i + 1) % ids.size()];
      if (a == b) continue;
      auto& u = edges[{std::min(a, b), std::max(a, b)}];
      (a < b ? u.forward : u.backward) += 1;
    }
  };
  for (const auto& poly : mesh) {
    add_ring(poly.outer);
    for (const auto& hole : poly.holes) add_ring(hole);
  }

  EdgeReport report;
  report.edge_count = edges.size();
  for (const auto& [key, uses] : edges) {
    const int total = uses.forward + uses.backward;
    const bool bad_orientation = total == 2 && uses.forward != 1;
    if (total != 2 || bad_orientation) {
      report.defects.push_back(
          {welder.point(key.first), welder.point(key.second), total, bad_orientation});
    }
  }
  return report;
}

std::string describe_edge(Point3 a, Point3 b) {
  auto pt = [](Point3 p) {
    return "(" + text::format_double(p.x) + " " + text::format_double(p.y) + " " +
           text::format_double(p.z) + ")";
  };
  return pt(a) + "-" + pt(b);
}

}  // namespace lod3
