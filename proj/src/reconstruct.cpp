#include "lod3/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "lod3/errors.hpp"
#include "lod3/text.hpp"

namespace lod3 {

namespace {

bool rects_touch(const Rect& a, const Rect& b) {
  return a.umin <= b.umax && b.umin <= a.umax && a.vmin <= b.vmax && b.vmin <= a.vmax;
}

}  // namespace

std::vector<OpeningInstance> merge_overlapping(const std::vector<OpeningInstance>& instances) {
  std::vector<std::string> face_order;
  std::map<std::string, std::vector<OpeningInstance>> by_face;
  for (const auto& inst : instances) {
    if (!by_face.contains(inst.face_id)) face_order.push_back(inst.face_id);
    by_face[inst.face_id].push_back(inst);
  }
  std::vector<OpeningInstance> out;
  for (const auto& face : face_order) {
    auto group = by_face[face];
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i < group.size() && !changed; ++i) {
        for (std::size_t j = i + 1; j < group.size() && !changed; ++j) {
          if (!rects_touch(group[i].rect, group[j].rect)) continue;
          OpeningInstance merged = group[i].confidence >= group[j].confidence ? group[i] : group[j];
          merged.rect = {std::min(group[i].rect.umin, group[j].rect.umin), std::min(group[i].rect.vmin, group[j].rect.vmin),
                         std::max(group[i].rect.umax, group[j].rect.umax), std::max(group[i].rect.vmax, group[j].rect.vmax)};
          merged.pixels.clear();
          group[i] = merged;
          group.erase(group.begin() + static_cast<std::ptrdiff_t>(j));
          changed = true;
        }
      }
    }
    std::sort(group.begin(), group.end(), [](const OpeningInstance& a, const OpeningInstance& b) {
      return a.rect.umin != b.rect.umin ? a.rect.umin < b.rect.umin : a.rect.vmin < b.rect.vmin;
    });
    out.insert(out.end(), group.begin(), group.end());
  }
  return out;
}

Point3 facade_point(const FacadeFrame& frame, double u, double v, double w) {
  return frame.origin + u * frame.u_axis + v * frame.v_axis + w * frame.normal();
}

namespace {

std::array<Vec2, 4> rect_corners(const Rect& r) {
  return {Vec2{r.umin, r.vmin}, Vec2{r.umax, r.vmin}, Vec2{r.umax, r.vmax}, Vec2{r.umin, r.vmax}};
}

// True if the rect lies in the interior of `ring`: corners strictly inside and
// no ring edge meets the rect boundary.
bool rect_inside(const Rect& r, const std::vector<Vec2>& ring) {
  const auto c = rect_corners(r);
  for (const auto& p : c)
    if (locate_point(p, ring) != PointLocation::Inside) return false;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Vec2 a = ring[i], b = ring[(i + 1) % ring.size()];
    for (int k = 0; k < 4; ++k)
      if (segments_intersect(a, b, c[k], c[(k + 1) % 4])) return false;
  }
  return true;
}

// True if `r` and `ring` share any point.
bool rect_meets(const Rect& r, const std::vector<Vec2>& ring) {
  const auto c = rect_corners(r);
  for (const auto& p : ring)
    if (p.u >= r.umin && p.u <= r.umax && p.v >= r.vmin && p.v <= r.vmax) return true;
  for (const auto& p : c)
    if (locate_point(p, ring) != PointLocation::Outside) return true;
  for (std::size_t i = 0; i < ring.size(); ++i)
    for (int k = 0; k < 4; ++k)
      if (segments_intersect(ring[i], ring[(i + 1) % ring.size()], c[k], c[(k + 1) % 4])) return true;
  return false;
}

std::vector<Vec2> ring_uv(const Ring& ring, const FacadeFrame& frame) {
  std::vector<Vec2> out;
  for (const auto& p : ring.vertices) out.push_back(world_to_uv(frame, p));
  return out;
}

std::string rect_text(const Rect& r) {
  return "(" + text::format_double(r.umin) + " " + text::format_double(r.vmin) + " " + text::format_double(r.umax) +
         " " + text::format_double(r.vmax) + ")";
}

}  // namespace

CutResult cut_openings(const BuildingSolid& solid, const std::vector<OpeningInstance>& instances, double depth,
                       double cell) {
  if (!(depth > 0.0)) throw DomainError("cut depth must be > 0");
  if (!(cell > 0.0)) throw DomainError("cell must be > 0");
  CutResult result;
  result.solid = solid;
  const auto merged = merge_overlapping(instances);

  std::map<std::string, int> per_face_count;
  std::vector<Face> reveals;
  for (const auto& inst : merged) {
    auto it = std::find_if(result.solid.faces.begin(), result.solid.faces.end(),
                           [&](const Face& f) { return f.id == inst.face_id; });
    if (it == result.solid.faces.end()) throw DomainError("instance references unknown face '" + inst.face_id + "'");
    Face& face = *it;
    const FacadeFrame frame = make_face_frame(face, cell);
    const auto outer = ring_uv(face.outer, frame);
    const Rect& r = inst.rect;
    if (!(r.umin < r.umax && r.vmin < r.vmax) || !rect_inside(r, outer))
      throw OpeningOutsideFace("opening " + rect_text(r) + " leaves face '" + face.id + "'");
    const Rect grown{r.umin - cell, r.vmin - cell, r.umax + cell, r.vmax + cell};
    if (!rect_inside(grown, outer))
      throw OpeningTouchesBoundary("opening " + rect_text(r) + " is within one cell of the boundary of face '" +
                                   face.id + "'");
    for (const auto& hole : face.inner)
      if (rect_meets(grown, ring_uv(hole, frame)))
        throw OpeningTouchesBoundary("opening " + rect_text(r) + " is within one cell of a hole of face '" + face.id +
                                     "'");

    CutRecord cut;
    cut.instance = inst;
    cut.frame = frame;
    cut.depth = depth;
    const auto c2 = rect_corners(r);
    for (int i = 0; i < 4; ++i) {
      cut.mouth[i] = facade_point(frame, c2[i].u, c2[i].v, 0.0);
      cut.bottom[i] = facade_point(frame, c2[i].u, c2[i].v, -depth);
    }
    // Hole rings run clockwise about the outward normal.
    face.inner.push_back(Ring{{cut.mouth[0], cut.mouth[3], cut.mouth[2], cut.mouth[1]}});

    const int k = per_face_count[face.id]++;
    for (int i = 0; i < 4; ++i) {
      const int j = (i + 1) % 4;
      Face side;
      side.id = face.id + "_cut" + std::to_string(k) + "_side" + std::to_string(i);
      side.label = SurfaceLabel::Wall;
      side.outer = Ring{{cut.mouth[i], cut.mouth[j], cut.bottom[j], cut.bottom[i]}};
      reveals.push_back(std::move(side));
    }
    result.cuts.push_back(std::move(cut));
  }
  for (auto& f : reveals) result.solid.faces.push_back(std::move(f));
  return result;
}

std::vector<Triangle> fit_template(const OpeningTemplate& tpl, const CutRecord& cut) {
  const double x0 = tpl.anchor_min_x(), x1 = tpl.anchor_max_x();
  const double y0 = tpl.anchor_min_y(), y1 = tpl.anchor_max_y();
  const double az = tpl.anchor_z();
  const Rect& r = cut.instance.rect;
  auto map_point = [&](Point3 p) {
    const double u = std::lerp(r.umin, r.umax, (p.x - x0) / (x1 - x0));
    const double v = std::lerp(r.vmin, r.vmax, (p.y - y0) / (y1 - y0));
    const double w = tpl.depth > 0.0 ? -cut.depth + (p.z - az) * (cut.depth / tpl.depth) : -cut.depth;
    return facade_point(cut.frame, u, v, w);
  };
  std::vector<Triangle> out;
  out.reserve(tpl.mesh.size());
  for (const auto& t : tpl.mesh) out.push_back({{map_point(t.v[0]), map_point(t.v[1]), map_point(t.v[2])}});
  return out;
}

TemplateSelection parse_template_selection(std::string_view s) {
  if (s == "first") return TemplateSelection::FirstMatch;
  if (s == "aspect") return TemplateSelection::NearestAspect;
  throw ConfigError("template selection must be 'first' or 'aspect', got '" + std::string(s) + "'");
}

const OpeningTemplate& select_template(const std::vector<OpeningTemplate>& library, const OpeningInstance& instance,
                                       TemplateSelection mode) {
  const OpeningTemplate* best = nullptr;
  double best_score = std::numeric_limits<double>::infinity();
  const double aspect = instance.rect.width() / instance.rect.height();
  for (const auto& tpl : library) {
    if (tpl.label != instance.label) continue;
    if (mode == TemplateSelection::FirstMatch) return tpl;
    const double t_aspect = (tpl.anchor_max_x() - tpl.anchor_min_x()) / (tpl.anchor_max_y() - tpl.anchor_min_y());
    const double score = std::abs(std::log(t_aspect / aspect));
    if (score < best_score) {
      best_score = score;
      best = &tpl;
    }
  }
  if (best == nullptr)
    throw ConfigError("template library has no " + std::string(to_string(instance.label)) + " template");
  return *best;
}

PolygonMesh Lod3Model::shell() const {
  PolygonMesh mesh = solid.mesh();
  for (const auto& o : openings)
    for (const auto& t : o.mesh) mesh.push_back(polygon_from_triangle(t));
  return mesh;
}

Lod3Model assemble_lod3(const BuildingSolid& cut_solid, std::vector<PlacedOpening> placements) {
  Lod3Model model;
  model.solid = cut_solid;
  model.solid.lod = 3;
  model.openings = std::move(placements);

  std::vector<std::string> problems;
  std::vector<std::string> ids;
  for (const auto& o : model.openings) {
    if (model.solid.find_face(o.face_id) == nullptr)
      problems.push_back("opening " + o.id + " references unknown face " + o.face_id);
    if (std::find(ids.begin(), ids.end(), o.id) != ids.end()) problems.push_back("duplicate opening id " + o.id);
    ids.push_back(o.id);
  }
  const auto mesh = model.shell();
  const auto report = analyze_edges(mesh);
  for (const auto& d : report.defects)
    problems.push_back("open edge " + describe_edge(d.a, d.b) +
                       (d.orientation_bad ? " (orientation)" : " uses=" + std::to_string(d.uses)));
  if (!problems.empty()) throw ValidationError("assembled LoD3 model is not watertight", problems);
  return model;
}

Lod3Model assemble_lod3(const CutResult& cut, const std::vector<OpeningTemplate>& library, TemplateSelection mode) {
  std::vector<PlacedOpening> placements;
  std::map<std::string, int> counter;
  for (const auto& c : cut.cuts) {
    const auto& tpl = select_template(library, c.instance, mode);
    PlacedOpening p;
    p.face_id = c.instance.face_id;
    p.id = c.instance.face_id + "_" + (c.instance.label == OpeningLabel::Door ? "door" : "window") +
           std::to_string(counter[c.instance.face_id]++);
    p.label = c.instance.label;
    p.confidence = c.instance.confidence;
    p.rect = c.instance.rect;
    p.template_name = tpl.name;
    p.mesh = fit_template(tpl, c);
    placements.push_back(std::move(p));
  }
  return assemble_lod3(cut.solid, std::move(placements));
}

BuildingSolid flatten(const Lod3Model& model) {
  BuildingSolid out = model.solid;
  for (const auto& o : model.openings) {
    for (std::size_t i = 0; i < o.mesh.size(); ++i) {
      Face f;
      f.id = o.id + "_t" + std::to_string(i);
      f.label = SurfaceLabel::Closure;
      f.outer = Ring{{o.mesh[i].v[0], o.mesh[i].v[1], o.mesh[i].v[2]}};
      out.faces.push_back(std::move(f));
    }
  }
  return out;
}

Lod3Model reconstruct_lod3(const BuildingSolid& solid, const std::vector<OpeningInstance>& instances,
                           const std::vector<OpeningTemplate>& library, double depth, double cell,
                           TemplateSelection mode) {
  return assemble_lod3(cut_openings(solid, instances, depth, cell), library, mode);
}

}  // namespace lod3
