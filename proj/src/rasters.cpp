#include "lod3/rasters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "lod3/errors.hpp"
#include "lod3/text.hpp"

namespace lod3 {

FacadeFrame make_face_frame(const Face& face, double cell) {
  if (!(cell > 0.0)) throw DomainError("raster cell must be > 0");
  const Plane plane = face.plane();
  const PlaneBasis basis = plane_basis(plane.normal);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double umin = inf, vmin = inf, umax = -inf, vmax = -inf;
  for (const auto& p : face.outer.vertices) {
    const double u = dot(p, basis.u);
    const double v = dot(p, basis.v);
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  const double u0 = std::floor(umin / cell) * cell;
  const double v0 = std::floor(vmin / cell) * cell;
  FacadeFrame f;
  f.face_id = face.id;
  f.origin = u0 * basis.u + v0 * basis.v - plane.offset * basis.n;
  f.u_axis = basis.u;
  f.v_axis = basis.v;
  f.cell = cell;
  f.width = std::max(1, static_cast<int>(std::ceil((umax - u0) / cell - 1e-9)));
  f.height = std::max(1, static_cast<int>(std::ceil((vmax - v0) / cell - 1e-9)));
  return f;
}

FacadeFrame null_frame(int width, int height) {
  FacadeFrame f;
  f.width = width;
  f.height = height;
  return f;
}

std::string_view to_string(Aggregation a) { return a == Aggregation::Mean ? "mean" : "max"; }

Aggregation parse_aggregation(std::string_view s) {
  if (s == "max") return Aggregation::Max;
  if (s == "mean") return Aggregation::Mean;
  throw ConfigError("aggregation must be max or mean, got '" + std::string(s) + "'");
}

FacadeRaster::FacadeRaster(FacadeFrame frame, std::vector<std::string> channels)
    : frame_(std::move(frame)), channels_(std::move(channels)) {
  if (frame_.width < 0 || frame_.height < 0) throw DomainError("negative raster size");
  for (std::size_t i = 0; i < channels_.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (channels_[i] == channels_[j]) throw DomainError("duplicate raster channel '" + channels_[i] + "'");
  data_.assign(static_cast<std::size_t>(frame_.width) * frame_.height * channels_.size(), 0.0f);
}

int FacadeRaster::channel_index(std::string_view name) const {
  for (std::size_t i = 0; i < channels_.size(); ++i)
    if (channels_[i] == name) return static_cast<int>(i);
  return -1;
}

Vec2 world_to_uv(const FacadeFrame& frame, Point3 p) {
  const Vec3 d = p - frame.origin;
  return {dot(d, frame.u_axis), dot(d, frame.v_axis)};
}

Point3 uv_to_world(const FacadeFrame& frame, Vec2 uv) {
  return frame.origin + uv.u * frame.u_axis + uv.v * frame.v_axis;
}

std::optional<PixelIndex> world_to_pixel(const FacadeFrame& frame, Point3 p, double band_dist) {
  const Vec3 d = p - frame.origin;
  if (std::abs(dot(d, frame.normal())) > band_dist) return std::nullopt;
  const double col = std::floor(dot(d, frame.u_axis) / frame.cell);
  const double row = std::floor(dot(d, frame.v_axis) / frame.cell);
  if (!(col >= 0.0 && row >= 0.0 && col < frame.width && row < frame.height)) return std::nullopt;
  return PixelIndex{static_cast<int>(row), static_cast<int>(col)};
}

std::vector<LabeledPoint> parse_points(std::string_view content) {
  std::vector<LabeledPoint> out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    const auto end = nl == std::string_view::npos ? content.size() : nl;
    const auto line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto tok = text::split(line);
    const auto where = "points line " + std::to_string(line_no);
    if (tok.size() != 11) throw ParseError(where + ": expected x y z and 8 probabilities");
    LabeledPoint p;
    p.position = {text::parse_double(tok[0], "x"), text::parse_double(tok[1], "y"), text::parse_double(tok[2], "z")};
    double sum = 0.0;
    for (int i = 0; i < 8; ++i) {
      p.prob[i] = text::parse_double(tok[3 + i], kPointLabels[i]);
      if (p.prob[i] < 0.0 || p.prob[i] > 1.0) throw ParseError(where + ": probability outside [0, 1]");
      sum += p.prob[i];
    }
    if (std::abs(sum - 1.0) > 1e-4) throw ParseError(where + ": probabilities do not sum to 1");
    out.push_back(p);
  }
  return out;
}

std::vector<LabeledPoint> read_points(const std::string& path) { return parse_points(text::read_file(path)); }

std::string format_points(std::span<const LabeledPoint> points) {
  std::string out;
  for (const auto& p : points) {
    out += text::format_double(p.position.x) + ' ' + text::format_double(p.position.y) + ' ' +
           text::format_double(p.position.z);
    for (double v : p.prob) out += ' ' + text::format_double(v);
    out += '\n';
  }
  return out;
}

FacadeRaster project_point_probabilities(std::span<const LabeledPoint> points, const FacadeFrame& frame,
                                         double band_dist, Aggregation agg) {
  FacadeRaster out(frame, std::vector<std::string>(kPointLabels.begin(), kPointLabels.end()));
  const std::int64_t n = static_cast<std::int64_t>(points.size());
  const std::int64_t pixels = static_cast<std::int64_t>(frame.width) * frame.height;

  std::vector<std::int64_t> pixel_of(points.size(), -1);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    if (auto px = world_to_pixel(frame, points[i].position, band_dist))
      pixel_of[i] = static_cast<std::int64_t>(px->row) * frame.width + px->col;
  }

  // Counting sort into per-pixel buckets; within a bucket points keep input
  // order so the mean is summed deterministically.
  std::vector<std::int64_t> start(pixels + 1, 0);
  for (std::int64_t p : pixel_of)
    if (p >= 0) ++start[p + 1];
  std::partial_sum(start.begin(), start.end(), start.begin());
  std::vector<std::int64_t> order(start.back());
  {
    std::vector<std::int64_t> fill(start.begin(), start.end() - 1);
    for (std::int64_t i = 0; i < n; ++i)
      if (pixel_of[i] >= 0) order[fill[pixel_of[i]]++] = i;
  }

  auto& data = out.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t px = 0; px < pixels; ++px) {
    const std::int64_t first = start[px];
    const std::int64_t last = start[px + 1];
    if (first == last) continue;
    for (int c = 0; c < 8; ++c) {
      double acc = 0.0;
      for (std::int64_t k = first; k < last; ++k) {
        const double v = points[order[k]].prob[c];
        acc = agg == Aggregation::Max ? std::max(acc, v) : acc + v;
      }
      if (agg == Aggregation::Mean) acc /= static_cast<double>(last - first);
      data[px * 8 + c] = static_cast<float>(std::clamp(acc, 0.0, 1.0));
    }
  }
  return out;
}

Vec2 Homography::apply(Vec2 p) const {
  const auto& h = h_;
  const double w = h[6] * p.u + h[7] * p.v + h[8];
  return {(h[0] * p.u + h[1] * p.v + h[2]) / w, (h[3] * p.u + h[4] * p.v + h[5]) / w};
}

Homography Homography::inverse() const {
  Eigen::Matrix3d m;
  m << h_[0], h_[1], h_[2], h_[3], h_[4], h_[5], h_[6], h_[7], h_[8];
  const Eigen::Matrix3d inv = m.inverse();
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[r * 3 + c] = inv(r, c);
  return Homography(out);
}

namespace {

bool any_three_collinear(const std::array<Vec2, 4>& p) {
  double scale = 0.0;
  for (const auto& a : p)
    for (const auto& b : p) scale = std::max(scale, std::hypot(a.u - b.u, a.v - b.v));
  if (!(scale > 0.0)) return true;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (int k = j + 1; k < 4; ++k)
        if (std::abs(cross2(p[j] - p[i], p[k] - p[i])) <= 1e-12 * scale * scale) return true;
  return false;
}

// Similarity that moves the centroid to 0 and the mean distance to sqrt(2).
Eigen::Matrix3d normalizer(const std::array<Vec2, 4>& p) {
  double cu = 0, cv = 0;
  for (const auto& q : p) {
    cu += q.u / 4;
    cv += q.v / 4;
  }
  double mean = 0;
  for (const auto& q : p) mean += std::hypot(q.u - cu, q.v - cv) / 4;
  const double s = std::sqrt(2.0) / mean;
  Eigen::Matrix3d t;
  t << s, 0, -s * cu, 0, s, -s * cv, 0, 0, 1;
  return t;
}

}  // namespace

Homography estimate_homography(std::span<const Correspondence> pairs) {
  if (pairs.size() != 4) throw DegenerateCorrespondence("homography needs exactly 4 correspondences");
  std::array<Vec2, 4> src{}, dst{};
  for (int i = 0; i < 4; ++i) {
    src[i] = pairs[i].image;
    dst[i] = pairs[i].uv;
  }
  if (any_three_collinear(src) || any_three_collinear(dst))
    throw DegenerateCorrespondence("three correspondences are collinear");

  const Eigen::Matrix3d ts = normalizer(src);
  const Eigen::Matrix3d td = normalizer(dst);
  Eigen::Matrix<double, 8, 9> a;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector3d s = ts * Eigen::Vector3d(src[i].u, src[i].v, 1.0);
    const Eigen::Vector3d d = td * Eigen::Vector3d(dst[i].u, dst[i].v, 1.0);
    const double x = s.x(), y = s.y(), u = d.x(), v = d.y();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 8, 9>> lu(a);
  lu.setThreshold(1e-10);
  if (lu.rank() < 8) throw DegenerateCorrespondence("correspondence system is rank-deficient");
  const Eigen::Matrix<double, 9, 1> h = lu.kernel().col(0);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Eigen::Matrix3d m = td.inverse() * hn * ts;
  if (std::abs(m(2, 2)) > 0.0) m /= m(2, 2);
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[r * 3 + c] = m(r, c);
  return Homography(out);
}

std::vector<Correspondence> parse_correspondences(std::string_view content) {
  std::vector<Correspondence> out;
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
    if (tok.size() != 5 || tok[0] != "corr")
      throw ParseError("correspondence line " + std::to_string(line_no) + ": expected 'corr x y u v'");
    out.push_back({{text::parse_double(tok[1], "x"), text::parse_double(tok[2], "y")},
                   {text::parse_double(tok[3], "u"), text::parse_double(tok[4], "v")}});
  }
  if (out.size() != 4) throw ParseError("correspondence file must hold exactly 4 pairs");
  return out;
}

std::vector<Correspondence> read_correspondences(const std::string& path) {
  return parse_correspondences(text::read_file(path));
}

std::string format_correspondences(std::span<const Correspondence> pairs) {
  std::string out;
  for (const auto& c : pairs) {
    out += "corr " + text::format_double(c.image.u) + ' ' + text::format_double(c.image.v) + ' ' +
           text::format_double(c.uv.u) + ' ' + text::format_double(c.uv.v) + '\n';
  }
  return out;
}

FacadeRaster project_image_probabilities(const FacadeRaster& image, std::span<const Correspondence> pairs,
                                         const FacadeFrame& frame) {
  const Homography to_image = estimate_homography(pairs).inverse();
  FacadeRaster out(frame, image.channels());
  const int nch = static_cast<int>(image.channel_count());
#pragma omp parallel for schedule(static)
  for (int r = 0; r < frame.height; ++r) {
    for (int c = 0; c < frame.width; ++c) {
      const Vec2 uv{(c + 0.5) * frame.cell, (r + 0.5) * frame.cell};
      const Vec2 xy = to_image.apply(uv);
      const double col = std::floor(xy.u);
      const double row = std::floor(xy.v);
      if (!(col >= 0.0 && row >= 0.0 && col < image.cols() && row < image.rows())) continue;
      for (int k = 0; k < nch; ++k) out.at(r, c, k) = image.at(static_cast<int>(row), static_cast<int>(col), k);
    }
  }
  return out;
}

namespace {

std::string vec_text(Vec3 v) {
  return text::format_double(v.x) + ' ' + text::format_double(v.y) + ' ' + text::format_double(v.z);
}

}  // namespace

std::string format_raster(const FacadeRaster& raster) {
  const auto& f = raster.frame();
  std::string out = "raster face=" + (f.is_null() ? std::string("-") : f.face_id) + " origin=" + vec_text(f.origin) +
                    " u=" + vec_text(f.u_axis) + " v=" + vec_text(f.v_axis) + " cell=" + text::format_double(f.cell) +
                    " rows=" + std::to_string(f.height) + " cols=" + std::to_string(f.width) + " channels=";
  for (std::size_t i = 0; i < raster.channels().size(); ++i) {
    if (i) out += ',';
    out += raster.channels()[i];
  }
  out += '\n';
  const std::size_t nch = raster.channel_count();
  const auto& data = raster.data();
  for (std::size_t px = 0; px < static_cast<std::size_t>(f.width) * f.height; ++px) {
    for (std::size_t k = 0; k < nch; ++k) {
      if (k) out += ' ';
      out += text::format_float(data[px * nch + k]);
    }
    out += '\n';
  }
  return out;
}

FacadeRaster parse_raster(std::string_view content) {
  const auto nl = content.find('\n');
  const auto header = text::split(content.substr(0, nl));
  if (header.empty() || header[0] != "raster") throw ParseError("raster: missing 'raster' header");
  FacadeFrame f;
  std::vector<std::string> channels;
  bool seen[8] = {};
  auto vec_after = [&](std::size_t& i, std::string_view first) {
    if (i + 2 >= header.size()) throw ParseError("raster: vector field needs 3 numbers");
    Vec3 v{text::parse_double(first, "raster vector"), text::parse_double(header[i + 1], "raster vector"),
           text::parse_double(header[i + 2], "raster vector")};
    i += 2;
    return v;
  };
  for (std::size_t i = 1; i < header.size(); ++i) {
    std::string_view k, v;
    if (!text::split_key_value(header[i], k, v)) throw ParseError("raster: bad header token '" + std::string(header[i]) + "'");
    if (k == "face") {
      f.face_id = v == "-" ? std::string() : std::string(v);
      seen[0] = true;
    } else if (k == "origin") {
      f.origin = vec_after(i, v);
      seen[1] = true;
    } else if (k == "u") {
      f.u_axis = vec_after(i, v);
      seen[2] = true;
    } else if (k == "v") {
      f.v_axis = vec_after(i, v);
      seen[3] = true;
    } else if (k == "cell") {
      f.cell = text::parse_double(v, "cell");
      seen[4] = true;
    } else if (k == "rows") {
      f.height = static_cast<int>(text::parse_int(v, "rows"));
      seen[5] = true;
    } else if (k == "cols") {
      f.width = static_cast<int>(text::parse_int(v, "cols"));
      seen[6] = true;
    } else if (k == "channels") {
      std::size_t p = 0;
      while (p <= v.size()) {
        const auto c = v.find(',', p);
        const auto e = c == std::string_view::npos ? v.size() : c;
        if (e == p) throw ParseError("raster: empty channel name");
        channels.emplace_back(v.substr(p, e - p));
        if (c == std::string_view::npos) break;
        p = c + 1;
      }
      seen[7] = true;
    } else {
      throw ParseError("raster: unknown header field '" + std::string(k) + "'");
    }
  }
  static constexpr const char* names[8] = {"face", "origin", "u", "v", "cell", "rows", "cols", "channels"};
  for (int i = 0; i < 8; ++i)
    if (!seen[i]) throw ParseError(std::string("raster: missing header field '") + names[i] + "'");
  if (!(f.cell > 0.0) || f.width < 0 || f.height < 0) throw ParseError("raster: invalid cell or size");
  if (!f.is_null()) {
    if (std::abs(norm(f.u_axis) - 1.0) > 1e-9 || std::abs(norm(f.v_axis) - 1.0) > 1e-9 ||
        std::abs(dot(f.u_axis, f.v_axis)) > 1e-9)
      throw ParseError("raster: frame axes are not orthonormal");
  }

  FacadeRaster raster;
  try {
    raster = FacadeRaster(f, channels);
  } catch (const DomainError& e) {
    throw ParseError(std::string("raster: ") + e.what());
  }
  const std::size_t nch = channels.size();
  const std::size_t pixels = static_cast<std::size_t>(f.width) * f.height;
  auto& data = raster.data();
  std::size_t px = 0;
  std::size_t pos = nl == std::string_view::npos ? content.size() : nl + 1;
  while (pos < content.size()) {
    const auto e = content.find('\n', pos);
    const auto end = e == std::string_view::npos ? content.size() : e;
    const auto line = content.substr(pos, end - pos);
    pos = end + 1;
    if (text::is_blank_or_comment(line)) continue;
    if (px >= pixels) throw ParseError("raster: more value lines than rows*cols");
    const auto tok = text::split(line);
    if (tok.size() != nch) throw ParseError("raster: pixel line needs one value per channel");
    for (std::size_t k = 0; k < nch; ++k) {
      const float val = text::parse_float(tok[k], "raster value");
      if (val < 0.0f || val > 1.0f) throw ParseError("raster: value out of range [0, 1]");
      data[px * nch + k] = val;
    }
    ++px;
  }
  if (px != pixels) throw ParseError("raster: expected " + std::to_string(pixels) + " value lines, got " + std::to_string(px));
  return raster;
}

void write_raster(const FacadeRaster& raster, const std::string& path) { text::write_file(path, format_raster(raster)); }

FacadeRaster read_raster(const std::string& path) { return parse_raster(text::read_file(path)); }

}  // namespace lod3
