// CityGML 2.0 subset writer and reader for LoD3 models.

#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "lod3/errors.hpp"
#include "lod3/reconstruct.hpp"
#include "lod3/text.hpp"

namespace lod3 {

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string_view surface_element(SurfaceLabel label) {
  switch (label) {
    case SurfaceLabel::Wall: return "bldg:WallSurface";
    case SurfaceLabel::Roof: return "bldg:RoofSurface";
    case SurfaceLabel::Ground: return "bldg:GroundSurface";
    case SurfaceLabel::Closure: return "bldg:ClosureSurface";
  }
  return "bldg:WallSurface";
}

std::string pos_list(const Ring& ring) {
  std::string out;
  auto add = [&](Point3 p) {
    if (!out.empty()) out += ' ';
    out += text::format_fixed(p.x, 3) + ' ' + text::format_fixed(p.y, 3) + ' ' + text::format_fixed(p.z, 3);
  };
  for (const auto& p : ring.vertices) add(p);
  if (!ring.vertices.empty()) add(ring.vertices.front());
  return out;
}

void write_polygon(std::string& out, const std::string& id, const Ring& outer, const std::vector<Ring>& inner,
                   const std::string& indent) {
  out += indent + "<gml:surfaceMember>\n";
  out += indent + "  <gml:Polygon gml:id=\"" + xml_escape(id) + "\">\n";
  out += indent + "    <gml:exterior><gml:LinearRing><gml:posList>" + pos_list(outer) +
         "</gml:posList></gml:LinearRing></gml:exterior>\n";
  for (const auto& h : inner)
    out += indent + "    <gml:interior><gml:LinearRing><gml:posList>" + pos_list(h) +
           "</gml:posList></gml:LinearRing></gml:interior>\n";
  out += indent + "  </gml:Polygon>\n";
  out += indent + "</gml:surfaceMember>\n";
}

std::string face_polygon_id(const Face& f) { return f.id + "_poly"; }
std::string opening_polygon_id(const PlacedOpening& o, std::size_t i) { return o.id + "_poly" + std::to_string(i); }

}  // namespace

std::string format_citygml(const Lod3Model& model) {
  if (model.solid.id.empty()) throw ParseError("CityGML export needs a non-empty building id");
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<core:CityModel xmlns:core=\"http://www.opengis.net/citygml/2.0\""
         " xmlns:bldg=\"http://www.opengis.net/citygml/building/2.0\""
         " xmlns:gen=\"http://www.opengis.net/citygml/generics/2.0\""
         " xmlns:gml=\"http://www.opengis.net/gml\""
         " xmlns:xlink=\"http://www.w3.org/1999/xlink\">\n";
  out += "  <core:cityObjectMember>\n";
  out += "    <bldg:Building gml:id=\"" + xml_escape(model.solid.id) + "\">\n";

  out += "      <bldg:lod3Solid>\n        <gml:Solid>\n          <gml:exterior>\n            <gml:CompositeSurface>\n";
  for (const auto& f : model.solid.faces)
    out += "              <gml:surfaceMember xlink:href=\"#" + xml_escape(face_polygon_id(f)) + "\"/>\n";
  for (const auto& o : model.openings)
    for (std::size_t i = 0; i < o.mesh.size(); ++i)
      out += "              <gml:surfaceMember xlink:href=\"#" + xml_escape(opening_polygon_id(o, i)) + "\"/>\n";
  out += "            </gml:CompositeSurface>\n          </gml:exterior>\n        </gml:Solid>\n      </bldg:lod3Solid>\n";

  for (const auto& f : model.solid.faces) {
    const std::string el(surface_element(f.label));
    out += "      <bldg:boundedBy>\n";
    out += "        <" + el + " gml:id=\"" + xml_escape(f.id) + "\">\n";
    out += "          <bldg:lod3MultiSurface>\n            <gml:MultiSurface>\n";
    write_polygon(out, face_polygon_id(f), f.outer, f.inner, "              ");
    out += "            </gml:MultiSurface>\n          </bldg:lod3MultiSurface>\n";
    for (const auto& o : model.openings) {
      if (o.face_id != f.id) continue;
      const std::string oel = o.label == OpeningLabel::Door ? "bldg:Door" : "bldg:Window";
      out += "          <bldg:opening>\n";
      out += "            <" + oel + " gml:id=\"" + xml_escape(o.id) + "\">\n";
      out += "              <gen:doubleAttribute name=\"confidence\"><gen:value>" + text::format_fixed(o.confidence, 4) +
             "</gen:value></gen:doubleAttribute>\n";
      out += "              <gen:stringAttribute name=\"template\"><gen:value>" + xml_escape(o.template_name) +
             "</gen:value></gen:stringAttribute>\n";
      out += "              <bldg:lod3MultiSurface>\n                <gml:MultiSurface>\n";
      for (std::size_t i = 0; i < o.mesh.size(); ++i) {
        const auto& t = o.mesh[i];
        write_polygon(out, opening_polygon_id(o, i), Ring{{t.v[0], t.v[1], t.v[2]}}, {}, "                  ");
      }
      out += "                </gml:MultiSurface>\n              </bldg:lod3MultiSurface>\n";
      out += "            </" + oel + ">\n";
      out += "          </bldg:opening>\n";
    }
    out += "        </" + el + ">\n";
    out += "      </bldg:boundedBy>\n";
  }
  out += "    </bldg:Building>\n  </core:cityObjectMember>\n</core:CityModel>\n";
  return out;
}

void write_citygml(const Lod3Model& model, const std::string& path) { text::write_file(path, format_citygml(model)); }

namespace {

using boost::property_tree::ptree;

Ring parse_pos_list(const std::string& s) {
  const auto tok = text::split(s);
  if (tok.size() % 3 != 0 || tok.size() < 12) throw ParseError("CityGML posList needs >= 4 points");
  Ring ring;
  for (std::size_t i = 0; i < tok.size(); i += 3)
    ring.vertices.push_back({text::parse_double(tok[i], "posList"), text::parse_double(tok[i + 1], "posList"),
                             text::parse_double(tok[i + 2], "posList")});
  if (!(ring.vertices.front() == ring.vertices.back())) throw ParseError("CityGML posList ring is not closed");
  ring.vertices.pop_back();
  return ring;
}

struct GmlPolygon {
  Ring outer;
  std::vector<Ring> inner;
};

std::vector<GmlPolygon> read_multi_surface(const ptree& ms_parent) {
  std::vector<GmlPolygon> out;
  const auto ms = ms_parent.get_child_optional("gml:MultiSurface");
  if (!ms) throw ParseError("CityGML: lod3MultiSurface without gml:MultiSurface");
  for (const auto& [name, member] : *ms) {
    if (name != "gml:surfaceMember") continue;
    const auto& poly = member.get_child("gml:Polygon");
    GmlPolygon p;
    p.outer = parse_pos_list(poly.get<std::string>("gml:exterior.gml:LinearRing.gml:posList"));
    for (const auto& [pn, part] : poly)
      if (pn == "gml:interior") p.inner.push_back(parse_pos_list(part.get<std::string>("gml:LinearRing.gml:posList")));
    out.push_back(std::move(p));
  }
  return out;
}

std::optional<SurfaceLabel> label_of_element(const std::string& name) {
  if (name == "bldg:WallSurface") return SurfaceLabel::Wall;
  if (name == "bldg:RoofSurface") return SurfaceLabel::Roof;
  if (name == "bldg:GroundSurface") return SurfaceLabel::Ground;
  if (name == "bldg:ClosureSurface") return SurfaceLabel::Closure;
  return std::nullopt;
}

}  // namespace

Lod3Model parse_citygml(const std::string& xml) {
  ptree tree;
  try {
    std::istringstream in(xml);
    boost::property_tree::read_xml(in, tree, boost::property_tree::xml_parser::trim_whitespace);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw ParseError(std::string("CityGML: ") + e.what());
  }
  Lod3Model model;
  try {
    const auto& building = tree.get_child("core:CityModel.core:cityObjectMember.bldg:Building");
    model.solid.id = building.get<std::string>("<xmlattr>.gml:id");
    model.solid.lod = building.get_child_optional("bldg:lod3Solid") ? 3 : 2;
    for (const auto& [name, bounded] : building) {
      if (name != "bldg:boundedBy") continue;
      for (const auto& [sname, surface] : bounded) {
        const auto label = label_of_element(sname);
        if (!label) continue;
        const std::string face_id = surface.get<std::string>("<xmlattr>.gml:id");
        const auto polys = read_multi_surface(surface.get_child("bldg:lod3MultiSurface"));
        if (polys.size() != 1) throw ParseError("CityGML: surface " + face_id + " must hold one polygon");
        model.solid.faces.push_back(Face{face_id, polys[0].outer, polys[0].inner, *label});
        for (const auto& [oname, opening] : surface) {
          if (oname != "bldg:opening") continue;
          for (const auto& [kind, obj] : opening) {
            if (kind != "bldg:Window" && kind != "bldg:Door") continue;
            PlacedOpening o;
            o.id = obj.get<std::string>("<xmlattr>.gml:id");
            o.face_id = face_id;
            o.label = kind == "bldg:Door" ? OpeningLabel::Door : OpeningLabel::Window;
            for (const auto& [an, attr] : obj) {
              const auto attr_name = attr.get_optional<std::string>("<xmlattr>.name");
              if (an == "gen:doubleAttribute" && attr_name == std::string("confidence"))
                o.confidence = text::parse_double(attr.get<std::string>("gen:value"), "confidence");
              if (an == "gen:stringAttribute" && attr_name == std::string("template"))
                o.template_name = attr.get<std::string>("gen:value");
            }
            for (const auto& p : read_multi_surface(obj.get_child("bldg:lod3MultiSurface"))) {
              const auto& v = p.outer.vertices;
              for (std::size_t i = 1; i + 1 < v.size(); ++i) o.mesh.push_back({{v[0], v[i], v[i + 1]}});
            }
            model.openings.push_back(std::move(o));
          }
        }
      }
    }
  } catch (const boost::property_tree::ptree_error& e) {
    throw ParseError(std::string("CityGML: ") + e.what());
  }
  return model;
}

Lod3Model read_citygml(const std::string& path) { return parse_citygml(text::read_file(path)); }

}  // namespace lod3
