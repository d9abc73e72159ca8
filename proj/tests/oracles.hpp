#pragma once

// Independent brute-force references. Nothing here calls the library code it
// is meant to check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "lod3/geometry.hpp"
#include "lod3/occupancy.hpp"

namespace oracle {

using lod3::Point3;
using lod3::Vec3;
using lod3::VoxelKey;

// Voxels whose open interior meets the open segment (a, b) in a piece of
// positive length, ordered by entry parameter, minus the voxel holding b.
// Every candidate voxel in the segment's bounding box is tested by slabs.
inline std::vector<VoxelKey> traverse(Point3 a, Point3 b, Point3 g, double vs) {
  auto cell = [&](double p, double o) { return static_cast<std::int64_t>(std::floor((p - o) / vs)); };
  std::array<std::int64_t, 3> lo{}, hi{};
  for (int ax = 0; ax < 3; ++ax) {
    lo[ax] = std::min(cell(a[ax], g[ax]), cell(b[ax], g[ax])) - 1;
    hi[ax] = std::max(cell(a[ax], g[ax]), cell(b[ax], g[ax])) + 1;
  }
  const VoxelKey end_key{static_cast<std::int32_t>(cell(b.x, g.x)), static_cast<std::int32_t>(cell(b.y, g.y)),
                         static_cast<std::int32_t>(cell(b.z, g.z))};
  std::vector<std::pair<double, VoxelKey>> hits;
  for (std::int64_t i = lo[0]; i <= hi[0]; ++i)
    for (std::int64_t j = lo[1]; j <= hi[1]; ++j)
      for (std::int64_t k = lo[2]; k <= hi[2]; ++k) {
        const std::array<std::int64_t, 3> idx{i, j, k};
        double t0 = 0.0, t1 = 1.0;
        bool empty = false;
        for (int ax = 0; ax < 3 && !empty; ++ax) {
          const double bmin = g[ax] + static_cast<double>(idx[ax]) * vs;
          const double bmax = g[ax] + static_cast<double>(idx[ax] + 1) * vs;
          const double d = b[ax] - a[ax];
          if (d == 0.0) {
            if (!(a[ax] > bmin && a[ax] < bmax)) empty = true;
            continue;
          }
          double ta = (bmin - a[ax]) / d, tb = (bmax - a[ax]) / d;
          if (ta > tb) std::swap(ta, tb);
          t0 = std::max(t0, ta);
          t1 = std::min(t1, tb);
        }
        if (empty || !(t1 > t0)) continue;
        const VoxelKey key{static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), static_cast<std::int32_t>(k)};
        if (key == end_key) continue;
        hits.push_back({t0, key});
      }
  std::sort(hits.begin(), hits.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<VoxelKey> out;
  for (const auto& h : hits) out.push_back(h.second);
  return out;
}

inline double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Direct twelve-term sum. cpt[c][pc][tex], states ordered (conflicted,
// confirmed, unknown) and (opening, other).
inline double posterior(const std::array<double, 3>& conflict, double pc, double tex,
                        const std::array<std::array<std::array<double, 2>, 2>, 3>& cpt) {
  const double ppc[2] = {pc, 1.0 - pc};
  const double ptex[2] = {tex, 1.0 - tex};
  double sum = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int p = 0; p < 2; ++p)
      for (int t = 0; t < 2; ++t) sum += cpt[c][p][t] * conflict[c] * ppc[p] * ptex[t];
  return sum;
}

// Binary image as vector<vector<int>>; out-of-image pixels are background.
using Grid = std::vector<std::vector<int>>;

inline Grid erode(const Grid& m, int k) {
  const int rows = static_cast<int>(m.size()), cols = rows ? static_cast<int>(m[0].size()) : 0, h = k / 2;
  Grid out(rows, std::vector<int>(cols, 0));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int all = 1;
      for (int dr = -h; dr <= h; ++dr)
        for (int dc = -h; dc <= h; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= rows || cc >= cols || !m[rr][cc]) all = 0;
        }
      out[r][c] = all;
    }
  return out;
}

// Dilation by stamping the kernel at every set pixel.
inline Grid dilate(const Grid& m, int k) {
  const int rows = static_cast<int>(m.size()), cols = rows ? static_cast<int>(m[0].size()) : 0, h = k / 2;
  Grid out(rows, std::vector<int>(cols, 0));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!m[r][c]) continue;
      for (int dr = -h; dr <= h; ++dr)
        for (int dc = -h; dc <= h; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr >= 0 && cc >= 0 && rr < rows && cc < cols) out[rr][cc] = 1;
        }
    }
  return out;
}

inline Grid opening(const Grid& m, int k) { return dilate(erode(m, k), k); }

// Linear interpolation between closest ranks, position q/100 * (n - 1).
inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
inline Point3 closest_on_triangle(Point3 p, Point3 a, Point3 b, Point3 c) {
  using lod3::dot;
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + (vb * denom) * ab + (vc * denom) * ac;
}

inline double triangle_distance(Point3 p, const std::array<Point3, 3>& t) {
  return lod3::norm(p - closest_on_triangle(p, t[0], t[1], t[2]));
}

// Axis-aligned cube [lo, lo + s]^3 as 12 outward triangles.
inline std::vector<std::array<Point3, 3>> cube_triangles(Point3 lo, double s) {
  const Point3 v[8] = {lo,
                       lo + Vec3{s, 0, 0},
                       lo + Vec3{s, s, 0},
                       lo + Vec3{0, s, 0},
                       lo + Vec3{0, 0, s},
                       lo + Vec3{s, 0, s},
                       lo + Vec3{s, s, s},
                       lo + Vec3{0, s, s}};
  const int quads[6][4] = {{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4}, {2, 3, 7, 6}, {1, 2, 6, 5}, {0, 4, 7, 3}};
  std::vector<std::array<Point3, 3>> out;
  for (const auto& q : quads) {
    out.push_back({v[q[0]], v[q[1]], v[q[2]]});
    out.push_back({v[q[0]], v[q[2]], v[q[3]]});
  }
  return out;
}

// Divergence theorem on a triangle soup.
inline double volume(const std::vector<std::array<Point3, 3>>& tris) {
  double v = 0.0;
  for (const auto& t : tris) v += lod3::dot(t[0], lod3::cross(t[1], t[2])) / 6.0;
  return v;
}

// Fan-triangulates a hole-free convex polygon.
inline std::vector<std::array<Point3, 3>> fan(const std::vector<Point3>& ring) {
  std::vector<std::array<Point3, 3>> out;
  for (std::size_t i = 1; i + 1 < ring.size(); ++i) out.push_back({ring[0], ring[i], ring[i + 1]});
  return out;
}

}  // namespace oracle
