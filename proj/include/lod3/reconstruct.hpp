#pragma once

// Rectangular recess cuts in planar faces, template fitting into the recess,
// and assembly of the LoD3 model.

#include <array>
#include <string>
#include <vector>

#include "lod3/extraction.hpp"
#include "lod3/model_io.hpp"
#include "lod3/rasters.hpp"

namespace lod3 {

/// Per face, repeatedly replaces overlapping or touching rects by their
/// bounding rect. The merged instance keeps the label and confidence of its
/// most confident member. Output order: face of first appearance, then umin, vmin.
std::vector<OpeningInstance> merge_overlapping(const std::vector<OpeningInstance>& instances);

struct CutRecord {
  OpeningInstance instance;
  FacadeFrame frame;
  double depth = 0.0;
  std::array<Point3, 4> mouth{};   // c0..c3 on the face, counter-clockwise about the normal
  std::array<Point3, 4> bottom{};  // b0..b3 = c_i - depth * normal
};

struct CutResult {
  BuildingSolid solid;  // host faces with inner rings plus reveal faces
  std::vector<CutRecord> cuts;
};

/// Point at façade coordinates (u, v) and signed offset w along the normal.
/// Cuts and template fitting both go through here so shared vertices agree
/// bit for bit.
Point3 facade_point(const FacadeFrame& frame, double u, double v, double w);

/// Rectangular recesses of `depth` behind each (merged) instance. The recess
/// bottom is left open for a template. OpeningOutsideFace if a rect leaves
/// its face, OpeningTouchesBoundary if it comes within one cell of the face
/// boundary or an existing hole. DomainError on unknown face ids.
CutResult cut_openings(const BuildingSolid& solid, const std::vector<OpeningInstance>& instances, double depth,
                       double cell);

/// Template mesh mapped into the recess: anchor rectangle onto the recess
/// bottom, canonical +z onto the face normal, template depth scaled to the
/// cut depth.
std::vector<Triangle> fit_template(const OpeningTemplate& tpl, const CutRecord& cut);

enum class TemplateSelection { FirstMatch, NearestAspect };

TemplateSelection parse_template_selection(std::string_view s);

/// ConfigError if no template carries the instance's label.
const OpeningTemplate& select_template(const std::vector<OpeningTemplate>& library, const OpeningInstance& instance,
                                       TemplateSelection mode);

struct PlacedOpening {
  std::string id;
  std::string face_id;
  OpeningLabel label = OpeningLabel::Window;
  double confidence = 0.0;
  Rect rect;
  std::string template_name;
  std::vector<Triangle> mesh;
};

struct Lod3Model {
  BuildingSolid solid;  // lod = 3
  std::vector<PlacedOpening> openings;

  /// Solid faces plus opening triangles.
  PolygonMesh shell() const;
};

/// Attaches placements (ids assigned in cut order) and checks the combined
/// shell is closed; ValidationError otherwise.
Lod3Model assemble_lod3(const CutResult& cut, const std::vector<OpeningTemplate>& library, TemplateSelection mode);

/// Lower-level variant with caller-provided placements.
Lod3Model assemble_lod3(const BuildingSolid& cut_solid, std::vector<PlacedOpening> placements);

/// LoD3 model as a plain solid: opening triangles become Closure faces.
BuildingSolid flatten(const Lod3Model& model);

/// The whole chain: merge, cut, fit, assemble.
Lod3Model reconstruct_lod3(const BuildingSolid& solid, const std::vector<OpeningInstance>& instances,
                           const std::vector<OpeningTemplate>& library, double depth, double cell,
                           TemplateSelection mode = TemplateSelection::FirstMatch);

/// CityGML subset (see docs/citygml_subset.md). ParseError for an empty
/// building id, IoError on write failure.
std::string format_citygml(const Lod3Model& model);
void write_citygml(const Lod3Model& model, const std::string& path);
Lod3Model parse_citygml(const std::string& xml);
Lod3Model read_citygml(const std::string& path);

}  // namespace lod3
