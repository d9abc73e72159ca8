#pragma once

// Geometric vocabulary shared by all modules: points, planar polygons with
// holes, and the edge bookkeeping used for watertightness checks.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lod3 {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return s * a; }
  friend constexpr Vec3 operator/(Vec3 a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
};

/// World position in meters (projected CRS).
using Point3 = Vec3;

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) { return a / norm(a); }
inline bool is_finite(Vec3 a) { return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z); }

struct Vec2 {
  double u = 0.0;
  double v = 0.0;
  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.u + b.u, a.v + b.v}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.u - b.u, a.v - b.v}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.u, s * a.v}; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double cross2(Vec2 a, Vec2 b) { return a.u * b.v - a.v * b.u; }

/// Plane n·x + offset = 0 with unit normal n.
struct Plane {
  Vec3 normal;
  double offset = 0.0;

  double signed_distance(Point3 p) const { return dot(normal, p) + offset; }
};

/// Closed ring; the first vertex is not repeated.
struct Ring {
  std::vector<Point3> vertices;
  friend bool operator==(const Ring&, const Ring&) = default;
};

/// Planar polygon with optional holes. Outer ring is counter-clockwise about
/// the outward normal, holes clockwise.
struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
};

using PolygonMesh = std::vector<Polygon>;

struct Triangle {
  std::array<Point3, 3> v;
};

Polygon polygon_from_triangle(const Triangle& t);

/// Newell area vector: direction is the ring normal, magnitude the area.
Vec3 area_vector(const Ring& ring);
Vec3 area_vector(const Polygon& polygon);

/// Best-fit plane of the outer ring (Newell normal through the centroid).
/// Returns a zero normal for degenerate rings.
Plane fit_plane(const Ring& ring);

/// Largest |distance| of any vertex of `polygon` from `plane`.
double max_plane_deviation(const Polygon& polygon, const Plane& plane);

/// Orthonormal in-plane basis with `v` pointing "up" (world +z projected) for
/// non-horizontal planes, world +y projected otherwise; u = v × normal.
struct PlaneBasis {
  Vec3 u;
  Vec3 v;
  Vec3 n;
};
PlaneBasis plane_basis(Vec3 normal);

std::vector<Vec2> project_ring(const Ring& ring, Point3 origin, const PlaneBasis& basis);

double signed_area_2d(std::span<const Vec2> ring);

enum class PointLocation { Outside, Boundary, Inside };

/// Point-in-polygon with explicit boundary detection (tolerance `eps`).
PointLocation locate_point(Vec2 p, std::span<const Vec2> ring, double eps = 1e-12);

/// True if closed segments [a,b] and [c,d] share at least one point.
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

/// Sutherland–Hodgman clip of an arbitrary ring against a convex CCW ring.
std::vector<Vec2> clip_to_convex(std::span<const Vec2> subject, std::span<const Vec2> convex_ccw);

/// Signed volume enclosed by a closed, outward-oriented polygon mesh.
double enclosed_volume(std::span<const Polygon> mesh);

double polygon_area(const Polygon& polygon);

/// Unsigned distance from `p` to a planar polygon with holes.
double point_polygon_distance(Point3 p, const Polygon& polygon);

/// Closest distance from `p` to segment [a,b].
double point_segment_distance(Point3 p, Point3 a, Point3 b);

/// Edge-use summary of a polygon soup after welding vertices within `weld_tol`.
struct EdgeDefect {
  Point3 a;
  Point3 b;
  int uses = 0;           // undirected use count
  bool orientation_bad = false;  // used twice but in the same direction
};

struct EdgeReport {
  std::vector<EdgeDefect> defects;  // deterministic order
  std::size_t edge_count = 0;

  bool closed_manifold() const { return defects.empty(); }
};

inline constexpr double kWeldTolerance = 1e-7;

EdgeReport analyze_edges(std::span<const Polygon> mesh, double weld_tol = kWeldTolerance);

/// Readable "(x y z)-(x y z)" for diagnostics.
std::string describe_edge(Point3 a, Point3 b);

}  // namespace lod3
