#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "lod3/errors.hpp"
#include "lod3/evaluate.hpp"
#include "lod3/reference.hpp"

using namespace lod3;

namespace {

OpeningInstance inst(Rect r, std::string face = "f") {
  OpeningInstance i;
  i.face_id = std::move(face);
  i.rect = r;
  i.confidence = 0.9;
  return i;
}

PolygonMesh to_mesh(const std::vector<std::array<Point3, 3>>& tris) {
  PolygonMesh m;
  for (const auto& t : tris) m.push_back(Polygon{Ring{{t[0], t[1], t[2]}}, {}});
  return m;
}

}  // namespace

TEST_CASE("rect IoU") {
  const Rect a{0, 0, 1, 1};
  CHECK(rect_iou(a, a) == 1.0);
  CHECK(rect_iou(a, {0.5, 0, 1.5, 1}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(rect_iou(a, {2, 2, 3, 3}) == 0.0);
  CHECK(rect_iou(a, {1, 0, 2, 1}) == 0.0);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0, 5), s(0.01, 3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng), y = u(rng), x2 = u(rng), y2 = u(rng);
    const Rect p{x, y, x + s(rng), y + s(rng)}, q{x2, y2, x2 + s(rng), y2 + s(rng)};
    const double iou = rect_iou(p, q);
    CHECK(iou == rect_iou(q, p));
    CHECK((iou >= 0.0 && iou <= 1.0));
    if (!(p == q)) CHECK(iou < 1.0);
  }
}

TEST_CASE("greedy one-to-one matching") {
  const std::vector<OpeningInstance> three = {inst({0, 0, 1, 1}), inst({2, 0, 3, 1}), inst({4, 0, 5, 2})};
  const auto same = match_instances(three, three, 0.5);
  CHECK(same.tp == 3);
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);

  // IoU 0.4: width-1 squares overlapping by 4/7.
  const double o = 4.0 / 7.0;
  REQUIRE(rect_iou({0, 0, 1, 1}, {1 - o, 0, 2 - o, 1}) == doctest::Approx(0.4));
  const auto weak = match_instances({inst({1 - o, 0, 2 - o, 1})}, {inst({0, 0, 1, 1})}, 0.5);
  CHECK(weak.tp == 0);
  CHECK(weak.fp == 1);
  CHECK(weak.fn == 1);

  // Two predictions over one ground truth at IoU 0.8 and 0.6.
  const auto gt = inst({0, 0, 1, 1});
  const auto p08 = inst({0, 0, 1, 0.8});
  const auto p06 = inst({0, 0, 0.6, 1});
  const auto two = match_instances({p06, p08}, {gt}, 0.5);
  CHECK(two.tp == 1);
  CHECK(two.fp == 1);
  REQUIRE(two.matches.size() == 1);
  CHECK(two.matches[0].pred == 1);
  CHECK(two.matches[0].iou == doctest::Approx(0.8));

  // Faces never match across.
  CHECK(match_instances({inst({0, 0, 1, 1}, "a")}, {inst({0, 0, 1, 1}, "b")}, 0.5).tp == 0);
}

TEST_CASE("detection rates") {
  CHECK(detection_rates({66, 60, 60, 60, 0}) == DetectionRates{91, 0, 100});
  CHECK(detection_rates({103, 87, 79, 76, 3}) == DetectionRates{74, 4, 87});
  CHECK(detection_rates({10, 10, 0, 0, 0}) == DetectionRates{0, 0, 0});
  CHECK_THROWS_AS(detection_rates({0, 10, 0, 0, 0}), DomainError);
  CHECK_THROWS_AS(detection_rates({10, 0, 0, 0, 0}), DomainError);
  CHECK(percent_rounded(1, 8) == 13);  // 12.5 rounds half up
  CHECK(percent_rounded(1, 3) == 33);
  CHECK(percent_rounded(2, 3) == 67);
  for (int den = 1; den < 200; ++den)
    for (int num = 0; num <= den; num += 7) CHECK(percent_rounded(num, den) == static_cast<int>(std::floor(100.0 * num / den + 0.5 + 1e-12)));
}

TEST_CASE("median IoU") {
  MatchResult r;
  r.matches = {{0, 1, 0.6}, {1, 2, 0.8}};
  CHECK(median_instance_iou(r, 3) == doctest::Approx(60));
  CHECK(median_instance_iou(r, 3, true) == doctest::Approx(70));
  CHECK(median_instance_iou(r, 4) == doctest::Approx(30));
  CHECK(median_instance_iou({}, 2, true) == 0.0);
}

TEST_CASE("mesh deviation") {
  const auto cube = to_mesh(oracle::cube_triangles({0, 0, 0}, 1));
  const std::vector<Point3> on = {{0.5, 0.5, 0}, {1, 0.2, 0.3}, {0, 0, 0}};
  const auto zero = mesh_deviation(on, cube);
  CHECK(zero.mean == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(zero.rms == doctest::Approx(0.0).epsilon(1e-15));

  const std::vector<Point3> off = {{0.5, 0.5, 2}, {0.5, 0.5, 4}};
  const auto d = mesh_deviation(off, cube);
  CHECK(d.mean == doctest::Approx(2.0));
  CHECK(d.rms == doctest::Approx(std::sqrt(5.0)));
  CHECK(d.max == doctest::Approx(3.0));
  CHECK_THROWS_AS(mesh_deviation({}, cube), DomainError);
  CHECK_THROWS_AS(mesh_deviation(off, {}), DomainError);
}

TEST_CASE("property: mesh deviation matches the brute-force triangle oracle") {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(-1.5, 2.5), c(-1, 1);
  for (int t = 0; t < 20; ++t) {
    auto tris = oracle::cube_triangles({c(rng), c(rng), c(rng)}, 1.0 + std::abs(c(rng)));
    // A stray sliver makes the nearest feature an edge or vertex more often.
    tris.push_back({Point3{c(rng), c(rng), 3}, Point3{c(rng), c(rng), 3.5}, Point3{c(rng), c(rng), 3.2}});
    const auto mesh = to_mesh(tris);
    std::vector<Point3> pts(200);
    for (auto& p : pts) p = {u(rng), u(rng), u(rng) * 1.5};
    const auto got = mesh_deviation(pts, mesh);
    double sum = 0, sq = 0, mx = 0;
    for (const auto& p : pts) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& tri : tris) best = std::min(best, oracle::triangle_distance(p, tri));
      sum += best;
      sq += best * best;
      mx = std::max(mx, best);
    }
    CHECK(got.mean == doctest::Approx(sum / pts.size()).epsilon(1e-9));
    CHECK(got.rms == doctest::Approx(std::sqrt(sq / pts.size())).epsilon(1e-9));
    CHECK(got.max == doctest::Approx(mx).epsilon(1e-9));
    CHECK(got.mean <= got.rms + 1e-12);
    const auto ref = reference::mesh_deviation(pts, mesh);
    CHECK(ref.mean == got.mean);
    CHECK(ref.rms == got.rms);
  }
}

TEST_CASE("surface samples lie on the mesh") {
  const auto cube = fixture::unit_cube().mesh();
  const auto pts = sample_surface(cube, 0.1);
  CHECK(pts.size() >= 600);
  CHECK(mesh_deviation(pts, cube).max < 1e-12);
  CHECK(sample_surface(cube, 0.1) == pts);
  // Small polygons still contribute a sample.
  const auto tiny = fixture::box(0, 0, 0, 0.01, 0.01, 0.01).mesh();
  CHECK(sample_surface(tiny, 0.1).size() >= 6);
}

TEST_CASE("watertightness") {
  CHECK(watertight(fixture::unit_cube().mesh()));
  CHECK(watertight(to_mesh(oracle::cube_triangles({0, 0, 0}, 1))));
  auto open = fixture::unit_cube().mesh();
  open.pop_back();
  CHECK(!watertight(open));

  // Two cubes sharing a face: the shared square's edges have four uses.
  auto pair = fixture::unit_cube().mesh();
  const auto second = fixture::box(1, 0, 0, 2, 1, 1).mesh();
  pair.insert(pair.end(), second.begin(), second.end());
  CHECK(!watertight(pair));

  // One face flipped.
  auto flipped = fixture::unit_cube().mesh();
  std::reverse(flipped[0].outer.vertices.begin(), flipped[0].outer.vertices.end());
  CHECK(!watertight(flipped));
}

TEST_CASE("metrics text") {
  EvaluationMetrics m;
  m.counts = {3, 3, 3, 3, 0};
  m.rates = detection_rates(m.counts);
  m.watertight = true;
  const auto text = format_metrics(m);
  CHECK(text.find("da=100\n") != std::string::npos);
  CHECK(text.find("watertight=true") != std::string::npos);
  CHECK(text == format_metrics(m));
}
