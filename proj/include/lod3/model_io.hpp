#pragma once

// Semantic building solids and the opening-template library: types, the
// line-oriented text format, and watertightness validation.
//
// Solid format (one statement per line, '#' comments):
//
//   solid <id> lod=<n>
//   face <id> label=<Wall|Roof|Ground|Closure>
//   outer x1 y1 z1 x2 y2 z2 ...
//   inner x1 y1 z1 ...          (zero or more per face)
//   end
//
// Template library:
//
//   template <name> label=<Window|Door> depth=<d_t>
//   tri x1 y1 z1 x2 y2 z2 x3 y3 z3      (one or more)
//   anchor x1 y1 z1 ... x4 y4 z4
//   end

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lod3/geometry.hpp"

namespace lod3 {

inline constexpr double kPlaneEps = 1e-6;  // meters

enum class SurfaceLabel { Wall, Roof, Ground, Closure };
enum class OpeningLabel { Window, Door };

std::string_view to_string(SurfaceLabel label);
std::string_view to_string(OpeningLabel label);
SurfaceLabel parse_surface_label(std::string_view s);
OpeningLabel parse_opening_label(std::string_view s);  // case-insensitive

struct Face {
  std::string id;
  Ring outer;
  std::vector<Ring> inner;
  SurfaceLabel label = SurfaceLabel::Wall;

  Plane plane() const { return fit_plane(outer); }
  Polygon polygon() const { return Polygon{outer, inner}; }
};

struct BuildingSolid {
  std::string id;
  std::vector<Face> faces;
  int lod = 2;

  const Face* find_face(std::string_view face_id) const;
  PolygonMesh mesh() const;
};

enum class ViolationKind {
  NonManifoldEdge,
  InconsistentOrientation,
  NonPlanarFace,
  DegenerateRing,
  SelfIntersectingRing,
  HoleOutsideOuter,
  OverlappingHoles,
  NonPositiveVolume,
  DuplicateFaceId,
  NonFiniteCoordinate,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string where;  // face id or edge description

  std::string describe() const;
};

/// Empty iff the solid satisfies every BuildingSolid invariant. Volume is only
/// checked once the edge structure is closed.
std::vector<Violation> validate_solid(const BuildingSolid& solid);

/// Face-local checks (ring size, planarity, self-intersection, holes).
std::vector<Violation> validate_face(const Face& face);

BuildingSolid parse_solid(std::string_view content);
std::string format_solid(const BuildingSolid& solid);

/// Parses then validates; throws ParseError or ValidationError.
BuildingSolid read_solid(const std::string& path);
void write_solid(const BuildingSolid& solid, const std::string& path);

struct OpeningTemplate {
  std::string name;
  OpeningLabel label = OpeningLabel::Window;
  double depth = 0.0;  // extent along +z of the canonical frame
  std::vector<Triangle> mesh;
  std::array<Point3, 4> anchor{};

  /// Axis-aligned anchor extent in the canonical x/y plane.
  double anchor_min_x() const;
  double anchor_max_x() const;
  double anchor_min_y() const;
  double anchor_max_y() const;
  double anchor_z() const { return anchor[0].z; }
};

/// Empty iff the template mesh closes exactly against its anchor rectangle:
/// interior edges used twice in opposite directions and the open boundary is
/// the anchor loop, counter-clockwise about +z.
std::vector<std::string> validate_template(const OpeningTemplate& tpl);

std::vector<OpeningTemplate> parse_template_library(std::string_view content);
std::string format_template_library(const std::vector<OpeningTemplate>& library);
std::vector<OpeningTemplate> read_template_library(const std::string& path);
void write_template_library(const std::vector<OpeningTemplate>& library, const std::string& path);

/// Unit flat panel: two triangles over the unit anchor square, depth 0.
OpeningTemplate flat_panel_template(std::string name, OpeningLabel label);

}  // namespace lod3
