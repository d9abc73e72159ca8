#include "lod3/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "lod3/errors.hpp"
#include "lod3/text.hpp"

namespace lod3 {

std::string_view to_string(ConflictState s) {
  switch (s) {
    case ConflictState::Conflicted: return "conflicted";
    case ConflictState::Confirmed: return "confirmed";
    case ConflictState::Unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(CueState s) { return s == CueState::Opening ? "opening" : "other"; }

namespace {

constexpr std::array<ConflictState, 3> kConflictStates = {ConflictState::Conflicted, ConflictState::Confirmed,
                                                          ConflictState::Unknown};
constexpr std::array<CueState, 2> kCueStates = {CueState::Opening, CueState::Other};

}  // namespace

Cpt Cpt::defaults() {
  using C = ConflictState;
  using Q = CueState;
  Cpt t;
  t.set(C::Conflicted, Q::Opening, Q::Opening, 0.95);
  t.set(C::Conflicted, Q::Opening, Q::Other, 0.80);
  t.set(C::Conflicted, Q::Other, Q::Opening, 0.80);
  t.set(C::Conflicted, Q::Other, Q::Other, 0.30);
  // Two strong cues on a confirmed surface (closed blinds, glass reflections)
  // must still clear P_high = 0.7 at 0.9 evidence, which needs >= 0.81.
  t.set(C::Confirmed, Q::Opening, Q::Opening, 0.85);
  t.set(C::Confirmed, Q::Opening, Q::Other, 0.25);
  t.set(C::Confirmed, Q::Other, Q::Opening, 0.25);
  t.set(C::Confirmed, Q::Other, Q::Other, 0.02);
  t.set(C::Unknown, Q::Opening, Q::Opening, 0.85);
  t.set(C::Unknown, Q::Opening, Q::Other, 0.45);
  t.set(C::Unknown, Q::Other, Q::Opening, 0.45);
  t.set(C::Unknown, Q::Other, Q::Other, 0.10);
  return t;
}

Cpt Cpt::uniform(double p) {
  Cpt t;
  for (auto c : kConflictStates)
    for (auto pc : kCueStates)
      for (auto tex : kCueStates) t.set(c, pc, tex, p);
  return t;
}

std::vector<std::string> validate_cpt(const Cpt& cpt) {
  std::vector<std::string> out;
  for (auto c : kConflictStates)
    for (auto pc : kCueStates)
      for (auto tex : kCueStates) {
        const std::string combo =
            std::string(to_string(c)) + "/" + std::string(to_string(pc)) + "/" + std::string(to_string(tex));
        const auto v = cpt.get(c, pc, tex);
        if (!v) {
          out.push_back("MissingCombination " + combo);
        } else if (!(*v >= 0.0 && *v <= 1.0)) {
          out.push_back("OutOfRange " + combo + " = " + text::format_double(*v));
        }
      }
  return out;
}

namespace {

ConflictState parse_conflict_state(std::string_view s) {
  for (auto c : kConflictStates)
    if (to_string(c) == s) return c;
  throw ParseError("cpt: unknown conflict state '" + std::string(s) + "'");
}

CueState parse_cue_state(std::string_view s) {
  if (s == "opening") return CueState::Opening;
  if (s == "other") return CueState::Other;
  throw ParseError("cpt: unknown cue state '" + std::string(s) + "'");
}

}  // namespace

Cpt parse_cpt(std::string_view content) {
  Cpt t;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    const auto end = nl == std::string_view::npos ? content.size() : nl;
    const auto line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto tok = text::split(line);
    if (tok.size() != 5 || tok[0] != "cpt")
      throw ParseError("cpt line " + std::to_string(line_no) + ": expected 'cpt <conflict> <pc> <tex> <p>'");
    const auto c = parse_conflict_state(tok[1]);
    const auto pc = parse_cue_state(tok[2]);
    const auto tex = parse_cue_state(tok[3]);
    if (t.get(c, pc, tex)) throw ParseError("cpt line " + std::to_string(line_no) + ": duplicate combination");
    t.set(c, pc, tex, text::parse_double(tok[4], "cpt probability"));
  }
  if (auto v = validate_cpt(t); !v.empty()) throw ValidationError("invalid CPT", v);
  return t;
}

Cpt read_cpt(const std::string& path) { return parse_cpt(text::read_file(path)); }

std::string format_cpt(const Cpt& cpt) {
  std::string out;
  for (auto c : kConflictStates)
    for (auto pc : kCueStates)
      for (auto tex : kCueStates) {
        const auto v = cpt.get(c, pc, tex);
        if (!v) continue;
        out += "cpt " + std::string(to_string(c)) + ' ' + std::string(to_string(pc)) + ' ' +
               std::string(to_string(tex)) + ' ' + text::format_double(*v) + '\n';
      }
  return out;
}

double pixel_posterior(const PixelEvidence& ev, const Cpt& cpt) {
  const std::array<double, 2> pc{ev.pc_opening, 1.0 - ev.pc_opening};
  const std::array<double, 2> tex{ev.tex_opening, 1.0 - ev.tex_opening};
  double p = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        p += cpt(kConflictStates[c], kCueStates[a], kCueStates[b]) * ev.conflict[c] * pc[a] * tex[b];
  return std::clamp(p, 0.0, 1.0);
}

namespace {

int require_channel(const FacadeRaster& r, std::string_view name, std::string_view map) {
  const int i = r.channel_index(name);
  if (i < 0) throw DomainError(std::string(map) + " map lacks channel '" + std::string(name) + "'");
  return i;
}

double opening_mass(const FacadeRaster& r, int row, int col) {
  const int w = r.channel_index("window");
  const int d = r.channel_index("door");
  double m = 0.0;
  if (w >= 0) m += r.at(row, col, w);
  if (d >= 0) m += r.at(row, col, d);
  return std::min(1.0, m);
}

}  // namespace

PixelEvidence pixel_evidence(const FacadeRaster* conflict, const FacadeRaster* pointcloud, const FacadeRaster* texture,
                             int row, int col) {
  PixelEvidence ev;
  if (conflict != nullptr) {
    ev.conflict = {conflict->at(row, col, require_channel(*conflict, "conflicted", "conflict")),
                   conflict->at(row, col, require_channel(*conflict, "confirmed", "conflict")),
                   conflict->at(row, col, require_channel(*conflict, "unknown", "conflict"))};
  }
  if (pointcloud != nullptr) ev.pc_opening = opening_mass(*pointcloud, row, col);
  if (texture != nullptr) ev.tex_opening = opening_mass(*texture, row, col);
  return ev;
}

FacadeRaster fuse_maps(const FacadeRaster* conflict, const FacadeRaster* pointcloud, const FacadeRaster* texture,
                       const Cpt& cpt, const FacadeFrame* frame) {
  if (auto v = validate_cpt(cpt); !v.empty()) throw ValidationError("invalid CPT", v);
  const FacadeFrame* common = nullptr;
  for (const FacadeRaster* r : {conflict, pointcloud, texture}) {
    if (r == nullptr) continue;
    if (common == nullptr) {
      common = &r->frame();
    } else if (!(r->frame() == *common)) {
      throw FrameMismatch("fusion inputs do not share one façade frame");
    }
  }
  if (common == nullptr) {
    if (frame == nullptr) throw FrameMismatch("fusion needs at least one map or an explicit frame");
    common = frame;
  } else if (frame != nullptr && !(*frame == *common)) {
    throw FrameMismatch("fusion inputs do not match the requested frame");
  }
  if (conflict) {
    require_channel(*conflict, "conflicted", "conflict");
    require_channel(*conflict, "confirmed", "conflict");
    require_channel(*conflict, "unknown", "conflict");
  }

  FacadeRaster out(*common, {"opening"});
  const int rows = common->height;
  const int cols = common->width;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.at(r, c, 0) = static_cast<float>(pixel_posterior(pixel_evidence(conflict, pointcloud, texture, r, c), cpt));
  return out;
}

OpeningLabel disambiguate_label(const FacadeRaster* pointcloud, const FacadeRaster* texture, int row, int col) {
  double window = 0.0, door = 0.0;
  for (const FacadeRaster* r : {pointcloud, texture}) {
    if (r == nullptr) continue;
    const int w = r->channel_index("window");
    const int d = r->channel_index("door");
    if (w >= 0) window += r->at(row, col, w);
    if (d >= 0) door += r->at(row, col, d);
  }
  return door > window ? OpeningLabel::Door : OpeningLabel::Window;
}

}  // namespace lod3
