#include "lod3/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lod3/errors.hpp"
#include "lod3/text.hpp"

namespace lod3 {

double rect_iou(const Rect& a, const Rect& b) {
  const double iw = std::min(a.umax, b.umax) - std::max(a.umin, b.umin);
  const double ih = std::min(a.vmax, b.vmax) - std::max(a.vmin, b.vmin);
  if (!(iw > 0.0 && ih > 0.0)) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

MatchResult match_instances(const std::vector<OpeningInstance>& pred, const std::vector<OpeningInstance>& gt,
                            double iou_min) {
  std::vector<InstanceMatch> pairs;
  for (std::size_t p = 0; p < pred.size(); ++p)
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (pred[p].face_id != gt[g].face_id) continue;
      const double iou = rect_iou(pred[p].rect, gt[g].rect);
      if (iou >= iou_min && iou > 0.0) pairs.push_back({p, g, iou});
    }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const InstanceMatch& a, const InstanceMatch& b) { return a.iou > b.iou; });
  std::vector<bool> pred_used(pred.size(), false), gt_used(gt.size(), false);
  MatchResult r;
  for (const auto& m : pairs) {
    if (pred_used[m.pred] || gt_used[m.gt]) continue;
    pred_used[m.pred] = gt_used[m.gt] = true;
    r.matches.push_back(m);
  }
  r.tp = static_cast<int>(r.matches.size());
  r.fp = static_cast<int>(pred.size()) - r.tp;
  r.fn = static_cast<int>(gt.size()) - r.tp;
  return r;
}

int percent_rounded(int num, int den) {
  if (den <= 0 || num < 0) throw DomainError("percent_rounded needs num >= 0 and den > 0");
  const long long n = 200LL * num + den;
  return static_cast<int>(n / (2LL * den));
}

DetectionRates detection_rates(const DetectionCounts& c) {
  if (c.ao <= 0) throw DomainError("detection_rates: AO must be > 0");
  if (c.mo <= 0) throw DomainError("detection_rates: MO must be > 0");
  if (c.d < 0 || c.tp < 0 || c.fp < 0) throw DomainError("detection_rates: negative count");
  DetectionRates r;
  r.da = percent_rounded(c.tp, c.ao);
  r.dm = percent_rounded(c.tp, c.mo);
  r.fa = c.d == 0 ? 0 : percent_rounded(c.fp, c.d);
  return r;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double median_instance_iou(const MatchResult& result, std::size_t gt_count, bool matched_only) {
  std::vector<double> values;
  if (matched_only) {
    for (const auto& m : result.matches) values.push_back(m.iou);
  } else {
    values.assign(gt_count, 0.0);
    for (const auto& m : result.matches)
      if (m.gt < gt_count) values[m.gt] = m.iou;
  }
  return 100.0 * median(std::move(values));
}

Deviation mesh_deviation(std::span<const Point3> samples, const PolygonMesh& mesh) {
  if (samples.empty()) throw DomainError("mesh_deviation needs at least one sample");
  if (mesh.empty()) throw DomainError("mesh_deviation needs a non-empty mesh");
  std::vector<double> dist(samples.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(samples.size()); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& poly : mesh) best = std::min(best, point_polygon_distance(samples[i], poly));
    dist[i] = best;
  }
  Deviation d;
  double sum = 0.0, sq = 0.0;
  for (double v : dist) {
    sum += v;
    sq += v * v;
    d.max = std::max(d.max, v);
  }
  d.mean = sum / static_cast<double>(dist.size());
  d.rms = std::sqrt(sq / static_cast<double>(dist.size()));
  return d;
}

std::vector<Point3> sample_surface(const PolygonMesh& mesh, double spacing) {
  if (!(spacing > 0.0)) throw DomainError("sample spacing must be > 0");
  std::vector<Point3> out;
  for (const auto& poly : mesh) {
    const Plane plane = fit_plane(poly.outer);
    if (norm(plane.normal) == 0.0) continue;
    const PlaneBasis basis = plane_basis(plane.normal);
    const Point3 origin = poly.outer.vertices.front();
    const auto outer = project_ring(poly.outer, origin, basis);
    std::vector<std::vector<Vec2>> holes;
    for (const auto& h : poly.holes) holes.push_back(project_ring(h, origin, basis));
    double umin = outer[0].u, umax = umin, vmin = outer[0].v, vmax = vmin;
    for (auto p : outer) {
      umin = std::min(umin, p.u);
      umax = std::max(umax, p.u);
      vmin = std::min(vmin, p.v);
      vmax = std::max(vmax, p.v);
    }
    std::size_t added = 0;
    for (double v = vmin + 0.5 * spacing; v < vmax; v += spacing)
      for (double u = umin + 0.5 * spacing; u < umax; u += spacing) {
        const Vec2 q{u, v};
        if (locate_point(q, outer) != PointLocation::Inside) continue;
        bool in_hole = false;
        for (const auto& h : holes)
          if (locate_point(q, h) != PointLocation::Outside) in_hole = true;
        if (in_hole) continue;
        out.push_back(origin + u * basis.u + v * basis.v);
        ++added;
      }
    if (added == 0 && poly.holes.empty()) {
      Point3 c{};
      for (const auto& p : poly.outer.vertices) c = c + p;
      out.push_back(c / static_cast<double>(poly.outer.vertices.size()));
    }
  }
  return out;
}

bool watertight(const PolygonMesh& mesh) { return !mesh.empty() && analyze_edges(mesh).closed_manifold(); }

std::string format_metrics(const EvaluationMetrics& m) {
  using text::format_double;
  std::string out;
  auto kv = [&](std::string_view k, const std::string& v) { out += std::string(k) + "=" + v + "\n"; };
  kv("ao", std::to_string(m.counts.ao));
  kv("mo", std::to_string(m.counts.mo));
  kv("d", std::to_string(m.counts.d));
  kv("tp", std::to_string(m.counts.tp));
  kv("fp", std::to_string(m.counts.fp));
  kv("fn", std::to_string(m.fn));
  kv("da", std::to_string(m.rates.da));
  kv("fa", std::to_string(m.rates.fa));
  kv("dm", std::to_string(m.rates.dm));
  kv("median_iou", text::format_fixed(m.median_iou, 4));
  kv("median_iou_matched", text::format_fixed(m.median_iou_matched, 4));
  kv("min_iou_matched", text::format_fixed(m.min_iou_matched, 6));
  if (m.have_deviation) {
    kv("deviation_mean", text::format_fixed(m.deviation.mean, 6));
    kv("deviation_rms", text::format_fixed(m.deviation.rms, 6));
    kv("deviation_max", text::format_fixed(m.deviation.max, 6));
  }
  kv("watertight", m.watertight ? "true" : "false");
  return out;
}

std::string format_report(const EvaluationMetrics& m, const std::vector<OpeningInstance>& pred,
                          const std::vector<OpeningInstance>& gt, const std::vector<std::string>& warnings) {
  std::string out = "LoD3 evaluation report\n\n";
  out += "Detection: AO=" + std::to_string(m.counts.ao) + " MO=" + std::to_string(m.counts.mo) +
         " D=" + std::to_string(m.counts.d) + " TP=" + std::to_string(m.counts.tp) +
         " FP=" + std::to_string(m.counts.fp) + " FN=" + std::to_string(m.fn) + "\n";
  out += "  DA=" + std::to_string(m.rates.da) + "%  FA=" + std::to_string(m.rates.fa) +
         "%  DM=" + std::to_string(m.rates.dm) + "%\n";
  out += "Median IoU (all ground truth): " + text::format_fixed(m.median_iou, 1) + "\n";
  out += "Median IoU (matched only):     " + text::format_fixed(m.median_iou_matched, 1) + "\n";
  if (m.have_deviation) {
    out += "Deviation vs reference: mean=" + text::format_fixed(m.deviation.mean, 4) +
           " m  RMS=" + text::format_fixed(m.deviation.rms, 4) + " m  max=" + text::format_fixed(m.deviation.max, 4) +
           " m\n";
  }
  out += std::string("Watertight: ") + (m.watertight ? "yes" : "no") + "\n\nMatches:\n";
  for (const auto& match : m.matches) {
    const auto& p = pred[match.pred];
    const auto& g = gt[match.gt];
    out += "  pred " + std::to_string(match.pred) + " (" + std::string(to_string(p.label)) + ", conf " +
           text::format_fixed(p.confidence, 4) + ") <-> gt " + std::to_string(match.gt) + " (" +
           std::string(to_string(g.label)) + ") on " + g.face_id + ": IoU " + text::format_fixed(match.iou, 4) + "\n";
  }
  if (m.matches.empty()) out += "  none\n";
  if (!warnings.empty()) {
    out += "\nWarnings:\n";
    for (const auto& w : warnings) out += "  " + w + "\n";
  }
  return out;
}

}  // namespace lod3
