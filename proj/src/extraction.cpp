#include "lod3/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lod3/errors.hpp"
#include "lod3/fusion.hpp"
#include "lod3/text.hpp"

namespace lod3 {

void ExtractionConfig::validate() const {
  if (!(p_high > 0.0 && p_high < 1.0)) throw ConfigError("p_high must lie in (0, 1)");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("kernel must be odd and >= 1");
  if (!(pe_lo >= 0.0 && pe_lo < pe_up && pe_up <= 100.0)) throw ConfigError("need 0 <= pe_lo < pe_up <= 100");
  if (min_pixels < 1) throw ConfigError("min_pixels must be >= 1");
}

std::size_t Mask::count() const { return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), 1)); }

Mask threshold_mask(const FacadeRaster& posterior, double p_high, int channel) {
  Mask m(posterior.rows(), posterior.cols());
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) m.set(r, c, posterior.at(r, c, channel) > p_high);
  return m;
}

std::vector<Cluster> connected_components(const Mask& mask, int connectivity) {
  std::vector<int> label(mask.cells.size(), -1);
  std::vector<Cluster> out;
  std::vector<PixelIndex> stack;
  for (int r0 = 0; r0 < mask.rows; ++r0) {
    for (int c0 = 0; c0 < mask.cols; ++c0) {
      const std::size_t i0 = static_cast<std::size_t>(r0) * mask.cols + c0;
      if (!mask.cells[i0] || label[i0] >= 0) continue;
      const int id = static_cast<int>(out.size());
      Cluster cluster;
      label[i0] = id;
      stack.push_back({r0, c0});
      while (!stack.empty()) {
        const PixelIndex p = stack.back();
        stack.pop_back();
        cluster.push_back(p);
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            if ((dr == 0 && dc == 0) || (connectivity == 4 && dr != 0 && dc != 0)) continue;
            const int r = p.row + dr, c = p.col + dc;
            if (r < 0 || c < 0 || r >= mask.rows || c >= mask.cols) continue;
            const std::size_t i = static_cast<std::size_t>(r) * mask.cols + c;
            if (mask.cells[i] && label[i] < 0) {
              label[i] = id;
              stack.push_back({r, c});
            }
          }
      }
      std::sort(cluster.begin(), cluster.end(),
                [](PixelIndex a, PixelIndex b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
      out.push_back(std::move(cluster));
    }
  }
  // Row-major discovery already yields (min row, min col) of the first pixel;
  // sort on the bounding-box corner as the contract states.
  auto corner = [](const Cluster& cl) {
    int rmin = std::numeric_limits<int>::max(), cmin = std::numeric_limits<int>::max();
    for (auto p : cl) {
      rmin = std::min(rmin, p.row);
      cmin = std::min(cmin, p.col);
    }
    return std::pair{rmin, cmin};
  };
  std::stable_sort(out.begin(), out.end(), [&](const Cluster& a, const Cluster& b) { return corner(a) < corner(b); });
  return out;
}

std::vector<Cluster> threshold_clusters(const FacadeRaster& posterior, double p_high) {
  return connected_components(threshold_mask(posterior, p_high), 8);
}

namespace {

// One separable pass of a square min (erode) or max (dilate) filter.
Mask square_filter(const Mask& in, int radius, bool erode) {
  const int rows = in.rows, cols = in.cols;
  Mask horiz(rows, cols), out(rows, cols);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      bool v = erode;
      for (int d = -radius; d <= radius; ++d) {
        const int cc = c + d;
        const bool s = cc >= 0 && cc < cols && in.at(r, cc);
        v = erode ? (v && s) : (v || s);
      }
      horiz.set(r, c, v);
    }
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      bool v = erode;
      for (int d = -radius; d <= radius; ++d) {
        const int rr = r + d;
        const bool s = rr >= 0 && rr < rows && horiz.at(rr, c);
        v = erode ? (v && s) : (v || s);
      }
      out.set(r, c, v);
    }
  return out;
}

}  // namespace

Mask morphological_opening(const Mask& mask, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw DomainError("morphological kernel must be odd and >= 1");
  const int radius = kernel / 2;
  return square_filter(square_filter(mask, radius, true), radius, false);
}

double rectangularity(const Cluster& cluster) {
  if (cluster.empty()) throw DomainError("rectangularity of an empty cluster");
  int rmin = cluster[0].row, rmax = rmin, cmin = cluster[0].col, cmax = cmin;
  for (auto p : cluster) {
    rmin = std::min(rmin, p.row);
    rmax = std::max(rmax, p.row);
    cmin = std::min(cmin, p.col);
    cmax = std::max(cmax, p.col);
  }
  const double box = static_cast<double>(rmax - rmin + 1) * static_cast<double>(cmax - cmin + 1);
  return static_cast<double>(cluster.size()) / box;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<Cluster> filter_instances(const std::vector<Cluster>& clusters, const ExtractionConfig& config) {
  std::vector<Cluster> sized;
  for (const auto& c : clusters)
    if (static_cast<int>(c.size()) >= config.min_pixels) sized.push_back(c);
  if (sized.size() <= 2) return sized;
  std::vector<double> index;
  for (const auto& c : sized) index.push_back(rectangularity(c));
  const double lo = percentile(index, config.pe_lo);
  const double hi = percentile(index, config.pe_up);
  std::vector<Cluster> out;
  for (std::size_t i = 0; i < sized.size(); ++i)
    if (index[i] >= lo && index[i] <= hi) out.push_back(sized[i]);
  return out;
}

double instance_confidence(const Cluster& cluster, const FacadeRaster& posterior, int channel) {
  if (cluster.empty()) throw DomainError("confidence of an empty cluster");
  double sum = 0.0;
  for (auto p : cluster) sum += posterior.at(p.row, p.col, channel);
  return sum / static_cast<double>(cluster.size());
}

OpeningInstance cluster_to_opening(const Cluster& cluster, const FacadeFrame& frame,
                                   const std::vector<OpeningLabel>& labels, double confidence) {
  if (cluster.empty()) throw DomainError("empty cluster");
  int rmin = cluster[0].row, rmax = rmin, cmin = cluster[0].col, cmax = cmin;
  for (auto p : cluster) {
    rmin = std::min(rmin, p.row);
    rmax = std::max(rmax, p.row);
    cmin = std::min(cmin, p.col);
    cmax = std::max(cmax, p.col);
  }
  OpeningInstance inst;
  inst.face_id = frame.face_id;
  inst.rect = {cmin * frame.cell, rmin * frame.cell, (cmax + 1) * frame.cell, (rmax + 1) * frame.cell};
  const auto doors = std::count(labels.begin(), labels.end(), OpeningLabel::Door);
  const auto windows = static_cast<std::ptrdiff_t>(labels.size()) - doors;
  inst.label = doors > windows ? OpeningLabel::Door : OpeningLabel::Window;
  inst.confidence = confidence;
  inst.pixels = cluster;
  return inst;
}

std::vector<OpeningInstance> extract_instances(const FacadeRaster& posterior, const FacadeRaster* pointcloud,
                                               const FacadeRaster* texture, const ExtractionConfig& config) {
  config.validate();
  const Mask mask = morphological_opening(threshold_mask(posterior, config.p_high), config.kernel);
  const auto clusters = filter_instances(connected_components(mask, 8), config);
  std::vector<OpeningInstance> out;
  for (const auto& cl : clusters) {
    std::vector<OpeningLabel> labels;
    labels.reserve(cl.size());
    for (auto p : cl) labels.push_back(disambiguate_label(pointcloud, texture, p.row, p.col));
    out.push_back(cluster_to_opening(cl, posterior.frame(), labels, instance_confidence(cl, posterior)));
  }
  return out;
}

std::string format_instances(const std::vector<OpeningInstance>& instances) {
  std::string out;
  for (const auto& i : instances) {
    std::string label(to_string(i.label));
    label[0] = static_cast<char>(label[0] - 'A' + 'a');
    out += "opening face=" + i.face_id + " label=" + label + " conf=" + text::format_double(i.confidence) +
           " rect=" + text::format_double(i.rect.umin) + ' ' + text::format_double(i.rect.vmin) + ' ' +
           text::format_double(i.rect.umax) + ' ' + text::format_double(i.rect.vmax) + '\n';
  }
  return out;
}

std::vector<OpeningInstance> parse_instances(std::string_view content) {
  std::vector<OpeningInstance> out;
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
    const std::string where = "instances line " + std::to_string(line_no);
    if (tok.size() != 8 || tok[0] != "opening") throw ParseError(where + ": expected 'opening face= label= conf= rect=u0 v0 u1 v1'");
    OpeningInstance inst;
    std::string_view k, v;
    if (!text::split_key_value(tok[1], k, v) || k != "face" || v.empty()) throw ParseError(where + ": missing face=");
    inst.face_id = std::string(v);
    if (!text::split_key_value(tok[2], k, v) || k != "label") throw ParseError(where + ": missing label=");
    inst.label = parse_opening_label(v);
    if (!text::split_key_value(tok[3], k, v) || k != "conf") throw ParseError(where + ": missing conf=");
    inst.confidence = text::parse_double(v, "conf");
    if (inst.confidence < 0.0 || inst.confidence > 1.0) throw ParseError(where + ": conf outside [0, 1]");
    if (!text::split_key_value(tok[4], k, v) || k != "rect") throw ParseError(where + ": missing rect=");
    inst.rect = {text::parse_double(v, "rect"), text::parse_double(tok[5], "rect"), text::parse_double(tok[6], "rect"),
                 text::parse_double(tok[7], "rect")};
    if (!(inst.rect.umin < inst.rect.umax && inst.rect.vmin < inst.rect.vmax)) throw ParseError(where + ": empty rect");
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<OpeningInstance> read_instances(const std::string& path) { return parse_instances(text::read_file(path)); }

void write_instances(const std::vector<OpeningInstance>& instances, const std::string& path) {
  text::write_file(path, format_instances(instances));
}

}  // namespace lod3
