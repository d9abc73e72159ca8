#include "lod3/model_io.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "lod3/errors.hpp"
#include "lod3/text.hpp"

namespace lod3 {

std::string_view to_string(SurfaceLabel label) {
  switch (label) {
    case SurfaceLabel::Wall: return "Wall";
    case SurfaceLabel::Roof: return "Roof";
    case SurfaceLabel::Ground: return "Ground";
    case SurfaceLabel::Closure: return "Closure";
  }
  return "Wall";
}

std::string_view to_string(OpeningLabel label) {
  return label == OpeningLabel::Door ? "Door" : "Window";
}

SurfaceLabel parse_surface_label(std::string_view s) {
  if (s == "Wall") return SurfaceLabel::Wall;
  if (s == "Roof") return SurfaceLabel::Roof;
  if (s == "Ground") return SurfaceLabel::Ground;
  if (s == "Closure") return SurfaceLabel::Closure;
  throw ParseError("unknown surface label '" + std::string(s) + "'");
}

OpeningLabel parse_opening_label(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "window") return OpeningLabel::Window;
  if (lower == "door") return OpeningLabel::Door;
  throw ParseError("unknown opening label '" + std::string(s) + "'");
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::NonManifoldEdge: return "NonManifoldEdge";
    case ViolationKind::InconsistentOrientation: return "InconsistentOrientation";
    case ViolationKind::NonPlanarFace: return "NonPlanarFace";
    case ViolationKind::DegenerateRing: return "DegenerateRing";
    case ViolationKind::SelfIntersectingRing: return "SelfIntersectingRing";
    case ViolationKind::HoleOutsideOuter: return "HoleOutsideOuter";
    case ViolationKind::OverlappingHoles: return "OverlappingHoles";
    case ViolationKind::NonPositiveVolume: return "NonPositiveVolume";
    case ViolationKind::DuplicateFaceId: return "DuplicateFaceId";
    case ViolationKind::NonFiniteCoordinate: return "NonFiniteCoordinate";
  }
  return "?";
}

std::string Violation::describe() const { return std::string(to_string(kind)) + " at " + where; }

const Face* BuildingSolid::find_face(std::string_view face_id) const {
  for (const auto& f : faces)
    if (f.id == face_id) return &f;
  return nullptr;
}

PolygonMesh BuildingSolid::mesh() const {
  PolygonMesh out;
  out.reserve(faces.size());
  for (const auto& f : faces) out.push_back(f.polygon());
  return out;
}

namespace {

bool ring_self_intersects(std::span<const Vec2> r) {
  const std::size_t n = r.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(r[i], r[(i + 1) % n], r[j], r[(j + 1) % n])) return true;
    }
  }
  return false;
}

bool rings_cross(std::span<const Vec2> a, std::span<const Vec2> b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (segments_intersect(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()])) return true;
  return false;
}

}  // namespace

std::vector<Violation> validate_face(const Face& face) {
  std::vector<Violation> out;
  auto finite_ring = [](const Ring& r) {
    return std::all_of(r.vertices.begin(), r.vertices.end(), [](Point3 p) { return is_finite(p); });
  };
  if (!finite_ring(face.outer) ||
      !std::all_of(face.inner.begin(), face.inner.end(), finite_ring)) {
    out.push_back({ViolationKind::NonFiniteCoordinate, face.id});
    return out;
  }
  if (face.outer.vertices.size() < 3 ||
      std::any_of(face.inner.begin(), face.inner.end(),
                  [](const Ring& r) { return r.vertices.size() < 3; })) {
    out.push_back({ViolationKind::DegenerateRing, face.id});
    return out;
  }
  const Plane plane = face.plane();
  if (norm(plane.normal) == 0.0) {
    out.push_back({ViolationKind::DegenerateRing, face.id + " (zero area)"});
    return out;
  }
  if (max_plane_deviation(face.polygon(), plane) > kPlaneEps) {
    out.push_back({ViolationKind::NonPlanarFace, face.id});
  }

  const PlaneBasis basis = plane_basis(plane.normal);
  const Point3 origin = face.outer.vertices.front();
  const auto outer2 = project_ring(face.outer, origin, basis);
  if (ring_self_intersects(outer2)) out.push_back({ViolationKind::SelfIntersectingRing, face.id});

  std::vector<std::vector<Vec2>> holes2;
  for (std::size_t h = 0; h < face.inner.size(); ++h) {
    auto hole2 = project_ring(face.inner[h], origin, basis);
    const std::string where = face.id + " inner " + std::to_string(h);
    if (ring_self_intersects(hole2)) out.push_back({ViolationKind::SelfIntersectingRing, where});
    const bool inside = std::all_of(hole2.begin(), hole2.end(), [&](Vec2 p) {
      return locate_point(p, outer2, 1e-9) == PointLocation::Inside;
    });
    if (!inside || rings_cross(hole2, outer2)) out.push_back({ViolationKind::HoleOutsideOuter, where});
    holes2.push_back(std::move(hole2));
  }
  for (std::size_t a = 0; a < holes2.size(); ++a) {
    for (std::size_t b = a + 1; b < holes2.size(); ++b) {
      const bool overlap = rings_cross(holes2[a], holes2[b]) ||
                           locate_point(holes2[a].front(), holes2[b]) != PointLocation::Outside ||
                           locate_point(holes2[b].front(), holes2[a]) != PointLocation::Outside;
      if (overlap) {
        out.push_back({ViolationKind::OverlappingHoles,
                       face.id + " inner " + std::to_string(a) + "/" + std::to_string(b)});
      }
    }
  }
  return out;
}

std::vector<Violation> validate_solid(const BuildingSolid& solid) {
  std::vector<Violation> out;
  std::set<std::string> ids;
  for (const auto& face : solid.faces) {
    if (!ids.insert(face.id).second) out.push_back({ViolationKind::DuplicateFaceId, face.id});
    auto fv = validate_face(face);
    out.insert(out.end(), fv.begin(), fv.end());
  }
  const PolygonMesh mesh = solid.mesh();
  const EdgeReport edges = analyze_edges(mesh);
  for (const auto& d : edges.defects) {
    out.push_back({d.orientation_bad ? ViolationKind::InconsistentOrientation
                                     : ViolationKind::NonManifoldEdge,
                   describe_edge(d.a, d.b) + " uses=" + std::to_string(d.uses)});
  }
  if (edges.closed_manifold() && !(enclosed_volume(mesh) > 0.0)) {
    out.push_back({ViolationKind::NonPositiveVolume, solid.id});
  }
  return out;
}

namespace {

struct LineCursor {
  std::string_view content;
  std::size_t pos = 0;
  int line_no = 0;

  bool next(std::string_view& line) {
    while (pos < content.size()) {
      const auto nl = content.find('\n', pos);
      const auto end = nl == std::string_view::npos ? content.size() : nl;
      line = content.substr(pos, end - pos);
      pos = end == content.size() ? end : end + 1;
      ++line_no;
      if (!text::is_blank_or_comment(line)) return true;
    }
    return false;
  }
};

[[noreturn]] void fail(const LineCursor& cur, const std::string& msg) {
  throw ParseError("line " + std::to_string(cur.line_no) + ": " + msg);
}

std::string_view require_attr(const LineCursor& cur, std::string_view token, std::string_view key) {
  std::string_view k, v;
  if (!text::split_key_value(token, k, v) || k != key) {
    fail(cur, "expected " + std::string(key) + "=<value>, got '" + std::string(token) + "'");
  }
  return v;
}

std::vector<Point3> parse_coords(const LineCursor& cur, std::span<const std::string_view> tokens) {
  if (tokens.size() % 3 != 0) fail(cur, "coordinate count is not a multiple of 3");
  std::vector<Point3> pts;
  pts.reserve(tokens.size() / 3);
  try {
    for (std::size_t i = 0; i < tokens.size(); i += 3) {
      pts.push_back({text::parse_double(tokens[i], "x"), text::parse_double(tokens[i + 1], "y"),
                     text::parse_double(tokens[i + 2], "z")});
    }
  } catch (const ParseError& e) {
    fail(cur, e.what());
  }
  return pts;
}

void append_coords(std::string& out, const std::vector<Point3>& pts) {
  for (const auto& p : pts) {
    out += ' ';
    out += text::format_double(p.x);
    out += ' ';
    out += text::format_double(p.y);
    out += ' ';
    out += text::format_double(p.z);
  }
}

}  // namespace

BuildingSolid parse_solid(std::string_view content) {
  LineCursor cur{content};
  std::string_view line;
  BuildingSolid solid;
  bool have_header = false;
  bool ended = false;
  while (cur.next(line)) {
    const auto tok = text::split(line);
    const auto kw = tok.front();
    if (ended) fail(cur, "content after 'end'");
    if (kw == "solid") {
      if (have_header) fail(cur, "duplicate 'solid' statement");
      if (tok.size() != 3) fail(cur, "expected: solid <id> lod=<n>");
      solid.id = std::string(tok[1]);
      try {
        solid.lod = static_cast<int>(text::parse_int(require_attr(cur, tok[2], "lod"), "lod"));
      } catch (const ParseError& e) {
        fail(cur, e.what());
      }
      have_header = true;
    } else if (!have_header) {
      fail(cur, "expected 'solid' statement first");
    } else if (kw == "face") {
      if (tok.size() != 3) fail(cur, "expected: face <id> label=<Wall|Roof|Ground|Closure>");
      Face face;
      face.id = std::string(tok[1]);
      try {
        face.label = parse_surface_label(require_attr(cur, tok[2], "label"));
      } catch (const ParseError& e) {
        fail(cur, e.what());
      }
      solid.faces.push_back(std::move(face));
    } else if (kw == "outer" || kw == "inner") {
      if (solid.faces.empty()) fail(cur, "'" + std::string(kw) + "' before any 'face'");
      auto pts = parse_coords(cur, std::span(tok).subspan(1));
      if (pts.size() < 3) fail(cur, "ring needs at least 3 vertices");
      Face& face = solid.faces.back();
      if (kw == "outer") {
        if (!face.outer.vertices.empty()) fail(cur, "face '" + face.id + "' has two outer rings");
        face.outer.vertices = std::move(pts);
      } else {
        face.inner.push_back(Ring{std::move(pts)});
      }
    } else if (kw == "end") {
      ended = true;
    } else {
      fail(cur, "unknown statement '" + std::string(kw) + "'");
    }
  }
  if (!have_header) throw ParseError("missing 'solid' statement");
  if (!ended) throw ParseError("missing 'end' statement");
  for (const auto& f : solid.faces)
    if (f.outer.vertices.empty()) throw ParseError("face '" + f.id + "' has no outer ring");
  return solid;
}

std::string format_solid(const BuildingSolid& solid) {
  std::string out = "solid " + solid.id + " lod=" + std::to_string(solid.lod) + "\n";
  for (const auto& face : solid.faces) {
    out += "face " + face.id + " label=" + std::string(to_string(face.label)) + "\n";
    out += "outer";
    append_coords(out, face.outer.vertices);
    out += '\n';
    for (const auto& hole : face.inner) {
      out += "inner";
      append_coords(out, hole.vertices);
      out += '\n';
    }
  }
  out += "end\n";
  return out;
}

BuildingSolid read_solid(const std::string& path) {
  BuildingSolid solid = parse_solid(text::read_file(path));
  const auto violations = validate_solid(solid);
  if (!violations.empty()) {
    std::vector<std::string> msgs;
    for (const auto& v : violations) msgs.push_back(v.describe());
    const std::string what = "solid '" + solid.id + "' in '" + path + "' is invalid: " + msgs.front() +
                             (msgs.size() > 1 ? " (+" + std::to_string(msgs.size() - 1) + " more)" : "");
    throw ValidationError(what, std::move(msgs));
  }
  return solid;
}

void write_solid(const BuildingSolid& solid, const std::string& path) {
  text::write_file(path, format_solid(solid));
}

double OpeningTemplate::anchor_min_x() const {
  return std::min({anchor[0].x, anchor[1].x, anchor[2].x, anchor[3].x});
}
double OpeningTemplate::anchor_max_x() const {
  return std::max({anchor[0].x, anchor[1].x, anchor[2].x, anchor[3].x});
}
double OpeningTemplate::anchor_min_y() const {
  return std::min({anchor[0].y, anchor[1].y, anchor[2].y, anchor[3].y});
}
double OpeningTemplate::anchor_max_y() const {
  return std::max({anchor[0].y, anchor[1].y, anchor[2].y, anchor[3].y});
}

std::vector<std::string> validate_template(const OpeningTemplate& tpl) {
  std::vector<std::string> out;
  const double x0 = tpl.anchor_min_x(), x1 = tpl.anchor_max_x();
  const double y0 = tpl.anchor_min_y(), y1 = tpl.anchor_max_y();
  const double z = tpl.anchor_z();
  if (!(x1 > x0) || !(y1 > y0)) out.push_back(tpl.name + ": anchor rectangle has zero extent");
  if (!(tpl.depth >= 0.0)) out.push_back(tpl.name + ": negative depth");
  for (const auto& c : tpl.anchor) {
    const bool corner = (c.x == x0 || c.x == x1) && (c.y == y0 || c.y == y1) && c.z == z;
    if (!corner) {
      out.push_back(tpl.name + ": anchor is not an axis-aligned rectangle in a z=const plane");
      break;
    }
  }
  if (tpl.mesh.empty()) out.push_back(tpl.name + ": empty mesh");
  if (!out.empty()) return out;

  constexpr double eps = 1e-9;
  for (const auto& tri : tpl.mesh) {
    for (const auto& p : tri.v) {
      if (p.x < x0 - eps || p.x > x1 + eps || p.y < y0 - eps || p.y > y1 + eps || p.z < z - eps ||
          p.z > z + tpl.depth + eps) {
        out.push_back(tpl.name + ": mesh vertex outside the anchor box");
        return out;
      }
    }
  }

  PolygonMesh shell;
  for (const auto& tri : tpl.mesh) shell.push_back(polygon_from_triangle(tri));
  // Closing lid, clockwise about +z: the mesh boundary must run counter-clockwise.
  shell.push_back(Polygon{Ring{{{x0, y0, z}, {x0, y1, z}, {x1, y1, z}, {x1, y0, z}}}, {}});
  const EdgeReport report = analyze_edges(shell);
  for (const auto& d : report.defects) {
    out.push_back(tpl.name + ": mesh does not close against its anchor at " + describe_edge(d.a, d.b) +
                  (d.orientation_bad ? " (orientation)" : " uses=" + std::to_string(d.uses)));
  }
  return out;
}

std::vector<OpeningTemplate> parse_template_library(std::string_view content) {
  LineCursor cur{content};
  std::string_view line;
  std::vector<OpeningTemplate> library;
  bool open = false;
  bool have_anchor = false;
  while (cur.next(line)) {
    const auto tok = text::split(line);
    const auto kw = tok.front();
    if (kw == "template") {
      if (open) fail(cur, "'template' inside an unterminated template");
      if (tok.size() != 4) fail(cur, "expected: template <name> label=<Window|Door> depth=<d_t>");
      OpeningTemplate tpl;
      tpl.name = std::string(tok[1]);
      try {
        tpl.label = parse_opening_label(require_attr(cur, tok[2], "label"));
        tpl.depth = text::parse_double(require_attr(cur, tok[3], "depth"), "depth");
      } catch (const ParseError& e) {
        fail(cur, e.what());
      }
      library.push_back(std::move(tpl));
      open = true;
      have_anchor = false;
    } else if (!open) {
      fail(cur, "'" + std::string(kw) + "' outside a template");
    } else if (kw == "tri") {
      auto pts = parse_coords(cur, std::span(tok).subspan(1));
      if (pts.size() != 3) fail(cur, "'tri' needs exactly 9 numbers");
      library.back().mesh.push_back(Triangle{{pts[0], pts[1], pts[2]}});
    } else if (kw == "anchor") {
      if (have_anchor) fail(cur, "duplicate 'anchor'");
      auto pts = parse_coords(cur, std::span(tok).subspan(1));
      if (pts.size() != 4) fail(cur, "'anchor' needs exactly 12 numbers");
      std::copy(pts.begin(), pts.end(), library.back().anchor.begin());
      have_anchor = true;
    } else if (kw == "end") {
      if (!have_anchor) fail(cur, "template '" + library.back().name + "' has no anchor");
      const auto problems = validate_template(library.back());
      if (!problems.empty()) throw ValidationError(problems.front(), problems);
      open = false;
    } else {
      fail(cur, "unknown statement '" + std::string(kw) + "'");
    }
  }
  if (open) throw ParseError("template '" + library.back().name + "' is missing 'end'");
  return library;
}

std::string format_template_library(const std::vector<OpeningTemplate>& library) {
  std::string out;
  for (const auto& tpl : library) {
    out += "template " + tpl.name + " label=" + std::string(to_string(tpl.label)) +
           " depth=" + text::format_double(tpl.depth) + "\n";
    for (const auto& tri : tpl.mesh) {
      out += "tri";
      append_coords(out, {tri.v.begin(), tri.v.end()});
      out += '\n';
    }
    out += "anchor";
    append_coords(out, {tpl.anchor.begin(), tpl.anchor.end()});
    out += "\nend\n";
  }
  return out;
}

std::vector<OpeningTemplate> read_template_library(const std::string& path) {
  return parse_template_library(text::read_file(path));
}

void write_template_library(const std::vector<OpeningTemplate>& library, const std::string& path) {
  text::write_file(path, format_template_library(library));
}

OpeningTemplate flat_panel_template(std::string name, OpeningLabel label) {
  OpeningTemplate tpl;
  tpl.name = std::move(name);
  tpl.label = label;
  tpl.depth = 0.0;
  const Point3 a{0, 0, 0}, b{1, 0, 0}, c{1, 1, 0}, d{0, 1, 0};
  tpl.mesh = {Triangle{{a, b, c}}, Triangle{{a, c, d}}};
  tpl.anchor = {a, b, c, d};
  return tpl;
}

}  // namespace lod3
