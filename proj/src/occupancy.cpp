#include "lod3/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

#include "lod3/errors.hpp"
#include "lod3/text.hpp"

namespace lod3 {

void OccupancyConfig::validate() const {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) throw ConfigError("vs must be > 0");
  if (!(prior > 0.0 && prior < 1.0)) throw ConfigError("prior must lie in (0, 1)");
  if (!(l_min < 0.0 && l_max > 0.0)) throw ConfigError("clamping requires l_min < 0 < l_max");
  if (!(l_hit > 0.0 && l_miss < 0.0)) throw ConfigError("increments require l_hit > 0 > l_miss");
  if (!(occ_threshold > 0.0 && occ_threshold < 1.0)) throw ConfigError("occ_threshold must lie in (0, 1)");
  if (!(max_range > 0.0)) throw ConfigError("max_range must be > 0");
}

double log_odds(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("log_odds: probability must lie in (0, 1)");
  return std::log(p / (1.0 - p));
}

double probability_from_log_odds(double l) { return 1.0 / (1.0 + std::exp(-l)); }

double clamped_update(double current, double increment, double l_min, double l_max) {
  return std::max(std::min(current + increment, l_max), l_min);
}

VoxelKey key_of(Point3 p, Point3 grid_origin, double v_s) {
  return {static_cast<std::int32_t>(std::floor((p.x - grid_origin.x) / v_s)),
          static_cast<std::int32_t>(std::floor((p.y - grid_origin.y) / v_s)),
          static_cast<std::int32_t>(std::floor((p.z - grid_origin.z) / v_s))};
}

Point3 voxel_center(VoxelKey key, Point3 grid_origin, double v_s) {
  return {grid_origin.x + (key.ix + 0.5) * v_s, grid_origin.y + (key.iy + 0.5) * v_s,
          grid_origin.z + (key.iz + 0.5) * v_s};
}

Point3 aligned_grid_origin(Point3 bbox_min, double v_s) {
  return {std::floor(bbox_min.x / v_s) * v_s, std::floor(bbox_min.y / v_s) * v_s,
          std::floor(bbox_min.z / v_s) * v_s};
}

std::vector<VoxelKey> traverse_voxels(Point3 origin, Point3 endpoint, Point3 grid_origin, double v_s) {
  std::vector<VoxelKey> out;
  const Vec3 d = endpoint - origin;
  std::array<std::int64_t, 3> idx{};
  std::array<int, 3> step{};
  std::array<double, 3> t_next{};
  constexpr double inf = std::numeric_limits<double>::infinity();

  for (int a = 0; a < 3; ++a) {
    const double o = origin[a];
    const double g = grid_origin[a];
    std::int64_t i = static_cast<std::int64_t>(std::floor((o - g) / v_s));
    while (voxel_boundary(g, i, v_s) > o) --i;
    while (voxel_boundary(g, i + 1, v_s) <= o) ++i;
    if (d[a] > 0.0) {
      step[a] = 1;
      t_next[a] = (voxel_boundary(g, i + 1, v_s) - o) / d[a];
    } else if (d[a] < 0.0) {
      if (voxel_boundary(g, i, v_s) == o) --i;
      step[a] = -1;
      t_next[a] = (voxel_boundary(g, i, v_s) - o) / d[a];
    } else {
      // Segment runs inside a boundary plane: it touches no voxel interior.
      if (voxel_boundary(g, i, v_s) == o) return out;
      step[a] = 0;
      t_next[a] = inf;
    }
    idx[a] = i;
  }

  const VoxelKey end_key = key_of(endpoint, grid_origin, v_s);
  double t = 0.0;
  while (true) {
    const double t_exit = std::min({t_next[0], t_next[1], t_next[2]});
    if (t < std::min(t_exit, 1.0)) {
      const VoxelKey k{static_cast<std::int32_t>(idx[0]), static_cast<std::int32_t>(idx[1]),
                       static_cast<std::int32_t>(idx[2])};
      if (k != end_key) out.push_back(k);
    }
    if (t_exit >= 1.0) break;
    // Exact ties step every tied axis at once: the voxels in between are only
    // touched on an edge or corner.
    for (int a = 0; a < 3; ++a) {
      if (t_next[a] != t_exit) continue;
      idx[a] += step[a];
      const double boundary = voxel_boundary(grid_origin[a], step[a] > 0 ? idx[a] + 1 : idx[a], v_s);
      t_next[a] = (boundary - origin[a]) / d[a];
    }
    t = t_exit;
  }
  return out;
}

OccupancyTree::OccupancyTree(OccupancyConfig config, Point3 grid_origin)
    : config_(config), grid_origin_(grid_origin) {
  Node root;
  root.child.fill(-1);
  nodes_.push_back(root);
}

bool OccupancyTree::in_range(VoxelKey key) {
  auto ok = [](std::int32_t v) { return v >= -kKeyOffset && v < kKeyOffset; };
  return ok(key.ix) && ok(key.iy) && ok(key.iz);
}

namespace {

int child_index(std::uint32_t ux, std::uint32_t uy, std::uint32_t uz, int level) {
  return static_cast<int>(((ux >> level) & 1u) | (((uy >> level) & 1u) << 1) | (((uz >> level) & 1u) << 2));
}

}  // namespace

std::int32_t* OccupancyTree::slot_for(VoxelKey key, bool create) {
  if (!in_range(key)) throw DomainError("voxel key outside the octree extent");
  const auto ux = static_cast<std::uint32_t>(key.ix + kKeyOffset);
  const auto uy = static_cast<std::uint32_t>(key.iy + kKeyOffset);
  const auto uz = static_cast<std::uint32_t>(key.iz + kKeyOffset);
  std::int32_t node = 0;
  for (int level = kDepth - 1; level >= 1; --level) {
    const int c = child_index(ux, uy, uz, level);
    std::int32_t next = nodes_[node].child[c];
    if (next < 0) {
      if (!create) return nullptr;
      Node fresh;
      fresh.child.fill(-1);
      next = static_cast<std::int32_t>(nodes_.size());
      nodes_.push_back(fresh);
      nodes_[node].child[c] = next;
    }
    node = next;
  }
  return &nodes_[node].child[child_index(ux, uy, uz, 0)];
}

const std::int32_t* OccupancyTree::find_slot(VoxelKey key) const {
  if (!in_range(key)) return nullptr;
  const auto ux = static_cast<std::uint32_t>(key.ix + kKeyOffset);
  const auto uy = static_cast<std::uint32_t>(key.iy + kKeyOffset);
  const auto uz = static_cast<std::uint32_t>(key.iz + kKeyOffset);
  std::int32_t node = 0;
  for (int level = kDepth - 1; level >= 1; --level) {
    node = nodes_[node].child[child_index(ux, uy, uz, level)];
    if (node < 0) return nullptr;
  }
  return &nodes_[node].child[child_index(ux, uy, uz, 0)];
}

std::optional<VoxelRecord> OccupancyTree::find(VoxelKey key) const {
  const std::int32_t* slot = find_slot(key);
  if (slot == nullptr || *slot < 0) return std::nullopt;
  return records_[*slot];
}

void OccupancyTree::update(VoxelKey key, double increment, double endpoint_distance) {
  std::int32_t* slot = slot_for(key, true);
  if (*slot < 0) {
    *slot = static_cast<std::int32_t>(records_.size());
    records_.push_back({log_odds(config_.prior), std::numeric_limits<double>::infinity()});
    record_keys_.push_back(key);
  }
  VoxelRecord& r = records_[*slot];
  r.log_odds = clamped_update(r.log_odds, increment, config_.l_min, config_.l_max);
  r.endpoint_distance = std::min(r.endpoint_distance, endpoint_distance);
}

void OccupancyTree::set(VoxelKey key, const VoxelRecord& record) {
  std::int32_t* slot = slot_for(key, true);
  if (*slot < 0) {
    *slot = static_cast<std::int32_t>(records_.size());
    records_.push_back(record);
    record_keys_.push_back(key);
  } else {
    records_[*slot] = record;
  }
}

std::vector<std::pair<VoxelKey, VoxelRecord>> OccupancyTree::leaves() const {
  std::vector<std::pair<VoxelKey, VoxelRecord>> out;
  out.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) out.emplace_back(record_keys_[i], records_[i]);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

namespace {

struct RayUpdate {
  VoxelKey key;
  bool hit;
  double endpoint_distance;
};

// True if the open segment (a, b) runs through the interior of voxel k for a
// positive length.
bool crosses_interior(Point3 a, Point3 b, VoxelKey k, Point3 g, double v_s) {
  const std::int64_t idx[3] = {k.ix, k.iy, k.iz};
  double t0 = 0.0, t1 = 1.0;
  for (int ax = 0; ax < 3; ++ax) {
    const double lo = voxel_boundary(g[ax], idx[ax], v_s), hi = voxel_boundary(g[ax], idx[ax] + 1, v_s);
    const double d = b[ax] - a[ax];
    if (d == 0.0) {
      if (!(a[ax] > lo && a[ax] < hi)) return false;
      continue;
    }
    const double ta = (lo - a[ax]) / d, tb = (hi - a[ax]) / d;
    t0 = std::max(t0, std::min(ta, tb));
    t1 = std::min(t1, std::max(ta, tb));
  }
  return t1 > t0;
}

// Update list of one ray, in the order integrate_ray applies it. A truncated
// ray also misses the voxel it stops in.
void ray_updates(const Ray& ray, Point3 grid_origin, const OccupancyConfig& cfg, std::vector<RayUpdate>& out) {
  out.clear();
  const Vec3 d = ray.endpoint - ray.origin;
  const double len = norm(d);
  if (!(len > 0.0)) return;
  const Vec3 dir = d / len;
  const double v_s = cfg.voxel_size;
  const bool truncated = len > cfg.max_range;
  const Point3 stop = truncated ? ray.origin + cfg.max_range * dir : ray.endpoint;
  for (const VoxelKey& k : traverse_voxels(ray.origin, stop, grid_origin, v_s)) {
    const Point3 c = voxel_center(k, grid_origin, v_s);
    out.push_back({k, false, std::abs(dot(ray.endpoint - c, dir))});
  }
  if (truncated) {
    const VoxelKey k = key_of(stop, grid_origin, v_s);
    if (crosses_interior(ray.origin, stop, k, grid_origin, v_s))
      out.push_back({k, false, std::abs(dot(ray.endpoint - voxel_center(k, grid_origin, v_s), dir))});
  } else {
    const VoxelKey k = key_of(ray.endpoint, grid_origin, v_s);
    out.push_back({k, true, norm(voxel_center(k, grid_origin, v_s) - ray.endpoint)});
  }
}

}  // namespace

void integrate_ray(OccupancyTree& tree, const Ray& ray) {
  std::vector<RayUpdate> updates;
  ray_updates(ray, tree.grid_origin(), tree.config(), updates);
  const auto& cfg = tree.config();
  for (const auto& u : updates) tree.update(u.key, u.hit ? cfg.l_hit : cfg.l_miss, u.endpoint_distance);
}

void integrate_rays(OccupancyTree& tree, std::span<const Ray> rays) {
  constexpr std::size_t kBatch = 16384;
  const OccupancyConfig& cfg = tree.config();
  const Point3 grid_origin = tree.grid_origin();
  const double prior_l = log_odds(cfg.prior);

  std::vector<std::vector<RayUpdate>> per_ray;
  std::vector<RayUpdate> flat;
  for (std::size_t begin = 0; begin < rays.size(); begin += kBatch) {
    const std::size_t n = std::min(kBatch, rays.size() - begin);
    per_ray.resize(n);

#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      ray_updates(rays[begin + i], grid_origin, cfg, per_ray[i]);
    }

    flat.clear();
    for (const auto& v : per_ray) flat.insert(flat.end(), v.begin(), v.end());
    // Stable: updates of one voxel stay in file order.
    std::stable_sort(flat.begin(), flat.end(),
                     [](const RayUpdate& a, const RayUpdate& b) { return a.key < b.key; });

    std::vector<std::size_t> group_start;
    for (std::size_t i = 0; i < flat.size(); ++i)
      if (i == 0 || flat[i].key != flat[i - 1].key) group_start.push_back(i);
    group_start.push_back(flat.size());
    const std::size_t groups = group_start.size() - 1;

    std::vector<VoxelRecord> result(groups);
#pragma omp parallel for schedule(static)
    for (std::int64_t g = 0; g < static_cast<std::int64_t>(groups); ++g) {
      const std::size_t first = group_start[g];
      const std::size_t last = group_start[g + 1];
      VoxelRecord r = tree.find(flat[first].key)
                          .value_or(VoxelRecord{prior_l, std::numeric_limits<double>::infinity()});
      for (std::size_t i = first; i < last; ++i) {
        r.log_odds = clamped_update(r.log_odds, flat[i].hit ? cfg.l_hit : cfg.l_miss, cfg.l_min, cfg.l_max);
        r.endpoint_distance = std::min(r.endpoint_distance, flat[i].endpoint_distance);
      }
      result[g] = r;
    }
    for (std::size_t g = 0; g < groups; ++g) tree.set(flat[group_start[g]].key, result[g]);
  }
}

VoxelStateResult voxel_state(const OccupancyTree& tree, VoxelKey key) {
  const auto rec = tree.find(key);
  if (!rec) return {OccupancyState::Unknown, tree.config().prior};
  const double p = probability_from_log_odds(rec->log_odds);
  return {p >= tree.config().occ_threshold ? OccupancyState::Occupied : OccupancyState::Empty, p};
}

std::string_view to_string(OccupancyState s) {
  switch (s) {
    case OccupancyState::Unknown: return "unknown";
    case OccupancyState::Empty: return "empty";
    case OccupancyState::Occupied: return "occupied";
  }
  return "unknown";
}

std::vector<Ray> parse_rays(std::string_view content) {
  std::vector<Ray> rays;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= content.size()) {
    const auto nl = content.find('\n', pos);
    const auto end = nl == std::string_view::npos ? content.size() : nl;
    const auto line = content.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (!text::is_blank_or_comment(line)) {
      const auto tok = text::split(line);
      if (tok.size() != 6) {
        throw ParseError("rays line " + std::to_string(line_no) + ": expected 6 numbers");
      }
      std::array<double, 6> v{};
      try {
        for (int i = 0; i < 6; ++i) v[i] = text::parse_double(tok[i], "ray coordinate");
      } catch (const ParseError& e) {
        throw ParseError("rays line " + std::to_string(line_no) + ": " + e.what());
      }
      Ray r{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
      if (r.origin == r.endpoint) {
        throw ParseError("rays line " + std::to_string(line_no) + ": zero-length ray");
      }
      rays.push_back(r);
    }
    if (nl == std::string_view::npos) break;
  }
  return rays;
}

std::vector<Ray> read_rays(const std::string& path) { return parse_rays(text::read_file(path)); }

std::string format_rays(std::span<const Ray> rays) {
  std::string out;
  for (const auto& r : rays) {
    out += text::format_double(r.origin.x) + ' ' + text::format_double(r.origin.y) + ' ' +
           text::format_double(r.origin.z) + ' ' + text::format_double(r.endpoint.x) + ' ' +
           text::format_double(r.endpoint.y) + ' ' + text::format_double(r.endpoint.z) + '\n';
  }
  return out;
}

Point3 grid_origin_for(std::span<const Ray> rays, std::span<const Point3> extra, double v_s) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Point3 lo{inf, inf, inf};
  auto grow = [&](Point3 p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
  };
  for (const auto& r : rays) {
    grow(r.origin);
    grow(r.endpoint);
  }
  for (const auto& p : extra) grow(p);
  if (!std::isfinite(lo.x)) return {};
  return aligned_grid_origin(lo, v_s);
}

OccupancyTree build_occupancy(const std::string& rays_path, const OccupancyConfig& config,
                              std::span<const Point3> extra_bbox) {
  config.validate();
  const auto rays = read_rays(rays_path);
  OccupancyTree tree(config, grid_origin_for(rays, extra_bbox, config.voxel_size));
  integrate_rays(tree, rays);
  return tree;
}

std::string format_occupancy(const OccupancyTree& tree) {
  const auto& c = tree.config();
  const Point3 g = tree.grid_origin();
  using text::format_double;
  std::string out = "occupancy vs=" + format_double(c.voxel_size) + " origin=" + format_double(g.x) + ' ' +
                    format_double(g.y) + ' ' + format_double(g.z) + " prior=" + format_double(c.prior) +
                    " l_min=" + format_double(c.l_min) + " l_max=" + format_double(c.l_max) +
                    " l_hit=" + format_double(c.l_hit) + " l_miss=" + format_double(c.l_miss) +
                    " occ=" + format_double(c.occ_threshold) + " max_range=" + format_double(c.max_range) +
                    "\n";
  for (const auto& [k, r] : tree.leaves()) {
    out += std::to_string(k.ix) + ' ' + std::to_string(k.iy) + ' ' + std::to_string(k.iz) + ' ' +
           format_double(r.log_odds) + ' ' + format_double(r.endpoint_distance) + '\n';
  }
  return out;
}

OccupancyTree parse_occupancy(std::string_view content) {
  const auto nl = content.find('\n');
  const auto header = text::split(content.substr(0, nl));
  if (header.empty() || header[0] != "occupancy") throw ParseError("occupancy: missing header");
  OccupancyConfig cfg;
  Point3 origin{};
  bool have_origin = false, have_vs = false;
  for (std::size_t i = 1; i < header.size(); ++i) {
    std::string_view k, v;
    if (!text::split_key_value(header[i], k, v)) throw ParseError("occupancy: bad header token");
    if (k == "origin") {
      if (i + 2 >= header.size()) throw ParseError("occupancy: origin needs 3 numbers");
      origin = {text::parse_double(v, "origin"), text::parse_double(header[i + 1], "origin"),
                text::parse_double(header[i + 2], "origin")};
      i += 2;
      have_origin = true;
    } else if (k == "vs") {
      cfg.voxel_size = text::parse_double(v, k);
      have_vs = true;
    } else if (k == "prior") {
      cfg.prior = text::parse_double(v, k);
    } else if (k == "l_min") {
      cfg.l_min = text::parse_double(v, k);
    } else if (k == "l_max") {
      cfg.l_max = text::parse_double(v, k);
    } else if (k == "l_hit") {
      cfg.l_hit = text::parse_double(v, k);
    } else if (k == "l_miss") {
      cfg.l_miss = text::parse_double(v, k);
    } else if (k == "occ") {
      cfg.occ_threshold = text::parse_double(v, k);
    } else if (k == "max_range") {
      cfg.max_range = text::parse_double(v, k);
    } else {
      throw ParseError("occupancy: unknown header field '" + std::string(k) + "'");
    }
  }
  if (!have_origin || !have_vs) throw ParseError("occupancy: header needs vs= and origin=");
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("occupancy: ") + e.what());
  }
  OccupancyTree tree(cfg, origin);
  if (nl == std::string_view::npos) return tree;
  std::string_view rest = content.substr(nl + 1);
  std::size_t pos = 0;
  while (pos < rest.size()) {
    const auto e = rest.find('\n', pos);
    const auto end = e == std::string_view::npos ? rest.size() : e;
    const auto line = rest.substr(pos, end - pos);
    pos = end + 1;
    if (text::is_blank_or_comment(line)) continue;
    const auto tok = text::split(line);
    if (tok.size() != 5) throw ParseError("occupancy: voxel line needs 5 fields");
    const VoxelKey key{static_cast<std::int32_t>(text::parse_int(tok[0], "ix")),
                       static_cast<std::int32_t>(text::parse_int(tok[1], "iy")),
                       static_cast<std::int32_t>(text::parse_int(tok[2], "iz"))};
    VoxelRecord r{text::parse_double(tok[3], "log_odds"), 0.0};
    if (tok[4] == "inf") {
      r.endpoint_distance = std::numeric_limits<double>::infinity();
    } else {
      r.endpoint_distance = text::parse_double(tok[4], "endpoint_distance");
    }
    if (r.log_odds < cfg.l_min || r.log_odds > cfg.l_max) throw ParseError("occupancy: log-odds outside clamp band");
    tree.set(key, r);
  }
  return tree;
}

void write_occupancy(const OccupancyTree& tree, const std::string& path) {
  text::write_file(path, format_occupancy(tree));
}

OccupancyTree read_occupancy(const std::string& path) { return parse_occupancy(text::read_file(path)); }

}  // namespace lod3
