#pragma once

// Detection rates, per-instance IoU, surface deviation and watertightness.

#include <span>
#include <string>
#include <vector>

#include "lod3/extraction.hpp"
#include "lod3/geometry.hpp"

namespace lod3 {

double rect_iou(const Rect& a, const Rect& b);

struct InstanceMatch {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double iou = 0.0;
};

struct MatchResult {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  std::vector<InstanceMatch> matches;  // in acceptance order
};

/// Greedy one-to-one matching by descending IoU among same-face pairs; a pair
/// is accepted while both sides are free and IoU >= iou_min.
MatchResult match_instances(const std::vector<OpeningInstance>& pred, const std::vector<OpeningInstance>& gt,
                            double iou_min);

struct DetectionCounts {
  int ao = 0;  // all openings
  int mo = 0;  // laser-measured openings
  int d = 0;   // detections
  int tp = 0;
  int fp = 0;
};

struct DetectionRates {
  int da = 0;
  int fa = 0;
  int dm = 0;
  friend bool operator==(const DetectionRates&, const DetectionRates&) = default;
};

/// 100 * num / den rounded half up, in exact integer arithmetic.
int percent_rounded(int num, int den);

/// DA = 100 TP/AO, FA = 100 FP/D (0 when D = 0), DM = 100 TP/MO. DomainError
/// when AO or MO is 0 or counts are negative.
DetectionRates detection_rates(const DetectionCounts& counts);

/// Median over ground-truth instances (unmatched count as 0), times 100.
/// With `matched_only`, the median over matched pairs instead (0 if none).
double median_instance_iou(const MatchResult& result, std::size_t gt_count, bool matched_only = false);

struct Deviation {
  double mean = 0.0;
  double rms = 0.0;
  double max = 0.0;
};

/// Unsigned point-to-mesh distance statistics. DomainError without samples
/// or faces.
Deviation mesh_deviation(std::span<const Point3> samples, const PolygonMesh& mesh);

/// Deterministic surface samples on a `spacing` lattice in each polygon's
/// plane (at least the polygon centroid for small polygons).
std::vector<Point3> sample_surface(const PolygonMesh& mesh, double spacing);

bool watertight(const PolygonMesh& mesh);

struct EvaluationMetrics {
  DetectionCounts counts;
  DetectionRates rates;
  int fn = 0;
  double median_iou = 0.0;
  double median_iou_matched = 0.0;
  double min_iou_matched = 0.0;
  bool have_deviation = false;
  Deviation deviation;
  bool watertight = false;
  std::vector<InstanceMatch> matches;
};

/// key=value lines, fixed key order.
std::string format_metrics(const EvaluationMetrics& m);

/// Human-readable report including per-match details and any warnings.
std::string format_report(const EvaluationMetrics& m, const std::vector<OpeningInstance>& pred,
                          const std::vector<OpeningInstance>& gt, const std::vector<std::string>& warnings);

}  // namespace lod3
