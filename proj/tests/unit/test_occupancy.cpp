#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "lod3/errors.hpp"
#include "lod3/occupancy.hpp"
#include "lod3/reference.hpp"
#include "lod3/text.hpp"

using namespace lod3;

TEST_CASE("log_odds") {
  CHECK(log_odds(0.5) == 0.0);
  CHECK(log_odds(0.7) == doctest::Approx(std::log(0.7 / 0.3)).epsilon(1e-15));
  CHECK(log_odds(0.7) == doctest::Approx(0.8473).epsilon(1e-4));
  CHECK(log_odds(0.9999) == doctest::Approx(9.2102).epsilon(1e-4));
  CHECK_THROWS_AS(log_odds(0.0), DomainError);
  CHECK_THROWS_AS(log_odds(1.0), DomainError);
  CHECK_THROWS_AS(log_odds(-0.1), DomainError);
  for (double p : {0.01, 0.3, 0.5, 0.77, 0.999}) CHECK(probability_from_log_odds(log_odds(p)) == doctest::Approx(p));
}

TEST_CASE("traverse_voxels examples") {
  const Point3 g{0, 0, 0};
  CHECK(traverse_voxels({0.05, 0.05, 0.05}, {0.35, 0.05, 0.05}, g, 0.1) ==
        std::vector<VoxelKey>{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  CHECK(traverse_voxels({0.01, 0.02, 0.03}, {0.09, 0.08, 0.07}, g, 0.1).empty());
  const Point3 a{0.05, 0.05, 0.05}, b{0.25, 0.25, 0.05};
  CHECK(traverse_voxels(a, b, g, 0.1) == oracle::traverse(a, b, g, 0.1));
  // Diagonal through exact voxel corners: side voxels are only touched at a point.
  CHECK(traverse_voxels({0.05, 0.05, 0.05}, {0.25, 0.25, 0.25}, g, 0.1) ==
        std::vector<VoxelKey>{{0, 0, 0}, {1, 1, 1}});
  // A segment inside a boundary plane meets no voxel interior.
  CHECK(traverse_voxels({0.0, 0.05, 0.05}, {0.0, 0.35, 0.05}, g, 0.1).empty());
}

TEST_CASE("traverse_voxels matches the slab oracle on random and grid-aligned rays") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.6);
  std::uniform_int_distribution<int> cell(0, 16);
  const Point3 g{0, 0, 0};
  const double vs = 0.1;
  int checked = 0;
  for (int i = 0; i < 3000; ++i) {
    Point3 a, b;
    if (i % 3 == 2) {
      // Lattice points put ties on voxel faces, edges and corners.
      a = {cell(rng) * 0.05, cell(rng) * 0.05, cell(rng) * 0.05};
      b = {cell(rng) * 0.05, cell(rng) * 0.05, cell(rng) * 0.05};
    } else {
      a = {u(rng), u(rng), u(rng)};
      b = {u(rng), u(rng), u(rng)};
    }
    if (a == b) continue;
    const auto got = traverse_voxels(a, b, g, vs);
    const auto want = oracle::traverse(a, b, g, vs);
    CHECK(got == want);
    const VoxelKey end = key_of(b, g, vs);
    CHECK(std::find(got.begin(), got.end(), end) == got.end());
    ++checked;
  }
  CHECK(checked > 2900);
}

TEST_CASE("integrate_ray examples") {
  OccupancyConfig cfg;
  OccupancyTree tree(cfg, {0, 0, 0});
  integrate_ray(tree, {{0.05, 0.05, 0.05}, {0.35, 0.05, 0.05}});
  CHECK(tree.size() == 4);
  CHECK(tree.find({3, 0, 0})->log_odds == cfg.l_hit);
  for (int i = 0; i < 3; ++i) CHECK(tree.find({i, 0, 0})->log_odds == cfg.l_miss);
  // Endpoint distances: along the ray for misses, to the hit point for the hit.
  CHECK(tree.find({0, 0, 0})->endpoint_distance == doctest::Approx(0.3));
  CHECK(tree.find({3, 0, 0})->endpoint_distance == doctest::Approx(0.0));

  // hit then miss: 0.85 - 0.4
  OccupancyTree t2(cfg, {0, 0, 0});
  integrate_ray(t2, {{0.05, 0.05, 0.05}, {0.15, 0.05, 0.05}});
  integrate_ray(t2, {{0.05, 0.05, 0.05}, {0.25, 0.05, 0.05}});
  CHECK(t2.find({1, 0, 0})->log_odds == doctest::Approx(0.45).epsilon(1e-12));

  // clamp fixed point
  OccupancyTree t3(cfg, {0, 0, 0});
  for (int i = 0; i < 10; ++i) integrate_ray(t3, {{0.05, 0.05, 0.05}, {0.15, 0.05, 0.05}});
  CHECK(t3.find({1, 0, 0})->log_odds == cfg.l_max);
  CHECK(t3.find({0, 0, 0})->log_odds == cfg.l_min);
}

TEST_CASE("rays beyond max_range produce misses only") {
  OccupancyConfig cfg;
  cfg.max_range = 0.3;
  OccupancyTree tree(cfg, {0, 0, 0});
  integrate_ray(tree, {{0.05, 0.05, 0.05}, {0.95, 0.05, 0.05}});
  for (const auto& [k, r] : tree.leaves()) CHECK(r.log_odds == cfg.l_miss);
  CHECK(!tree.find({9, 0, 0}));
  CHECK(tree.find({3, 0, 0}));
  CHECK(!tree.find({4, 0, 0}));
}

TEST_CASE("voxel_state") {
  OccupancyConfig cfg;
  OccupancyTree tree(cfg, {0, 0, 0});
  const auto unknown = voxel_state(tree, {5, 5, 5});
  CHECK(unknown.state == OccupancyState::Unknown);
  CHECK(unknown.probability == 0.5);
  for (int i = 0; i < 3; ++i) integrate_ray(tree, {{0.05, 0.05, 0.05}, {0.15, 0.05, 0.05}});
  const auto occ = voxel_state(tree, {1, 0, 0});
  CHECK(occ.state == OccupancyState::Occupied);
  CHECK(occ.probability == doctest::Approx(1.0 / (1.0 + std::exp(-std::min(3 * 0.85, 3.5)))));
  OccupancyTree t2(cfg, {0, 0, 0});
  integrate_ray(t2, {{0.05, 0.05, 0.05}, {0.15, 0.05, 0.05}});
  const auto empty = voxel_state(t2, {0, 0, 0});
  CHECK(empty.state == OccupancyState::Empty);
  CHECK(empty.probability == doctest::Approx(1.0 / (1.0 + std::exp(0.4))));
}

TEST_CASE("property: clamp invariant over random update sequences") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> inc(-3.0, 3.0);
  std::uniform_int_distribution<int> len(1, 60);
  for (int s = 0; s < 2000; ++s) {
    double l = 0.0;
    for (int i = len(rng); i > 0; --i) {
      l = clamped_update(l, inc(rng), -2.0, 3.5);
      REQUIRE(l >= -2.0);
      REQUIRE(l <= 3.5);
    }
  }
}

TEST_CASE("property: parallel integration is bit-identical to serial file order") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<Ray> rays;
  for (int i = 0; i < 40000; ++i) {
    Ray r{{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}};
    if (r.origin != r.endpoint) rays.push_back(r);
  }
  OccupancyConfig cfg;
  OccupancyTree a(cfg, {0, 0, 0}), b(cfg, {0, 0, 0});
  integrate_rays(a, rays);
  reference::integrate_rays(b, rays);
  const auto la = a.leaves(), lb = b.leaves();
  REQUIRE(la.size() == lb.size());
  bool same = true;
  for (std::size_t i = 0; i < la.size(); ++i)
    same = same && la[i].first == lb[i].first && la[i].second == lb[i].second;
  CHECK(same);
  CHECK(format_occupancy(a) == format_occupancy(b));
}

TEST_CASE("property: order independence while inside the clamp band") {
  // Short rays with few updates per voxel never reach the clamps.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  OccupancyConfig cfg;
  cfg.l_min = -50;
  cfg.l_max = 50;
  std::vector<Ray> rays;
  for (int i = 0; i < 300; ++i) rays.push_back({{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}});
  OccupancyTree a(cfg, {0, 0, 0});
  reference::integrate_rays(a, rays);
  for (const auto& [k, r] : a.leaves()) REQUIRE((r.log_odds > cfg.l_min && r.log_odds < cfg.l_max));
  for (int perm = 0; perm < 5; ++perm) {
    std::shuffle(rays.begin(), rays.end(), rng);
    OccupancyTree b(cfg, {0, 0, 0});
    reference::integrate_rays(b, rays);
    const auto la = a.leaves(), lb = b.leaves();
    REQUIRE(la.size() == lb.size());
    for (std::size_t i = 0; i < la.size(); ++i) {
      CHECK(la[i].first == lb[i].first);
      CHECK(la[i].second.log_odds == doctest::Approx(lb[i].second.log_odds).epsilon(1e-9));
    }
  }
}

TEST_CASE("rays file and build_occupancy") {
  CHECK(parse_rays("# c\n\n0 0 0 1 1 1\n").size() == 1);
  CHECK(parse_rays("").empty());
  CHECK_THROWS_AS(parse_rays("0 0 0 0 0 0\n"), ParseError);
  CHECK_THROWS_AS(parse_rays("0 0 0 1 1\n"), ParseError);
  CHECK_THROWS_AS(parse_rays("0 0 0 1 1 x\n"), ParseError);

  fixture::TempDir dir("rays");
  const std::vector<Ray> rays = {{{0.05, 0.05, 0.05}, {0.35, 0.05, 0.05}},
                                 {{0.05, 0.15, 0.05}, {0.35, 0.05, 0.05}},
                                 {{0.35, 0.35, 0.35}, {0.05, 0.05, 0.05}}};
  text::write_file(dir.file("r.txt"), format_rays(rays));
  OccupancyConfig cfg;
  const auto built = build_occupancy(dir.file("r.txt"), cfg);
  OccupancyTree seq(cfg, built.grid_origin());
  for (const auto& r : rays) integrate_ray(seq, r);
  CHECK(format_occupancy(built) == format_occupancy(seq));

  text::write_file(dir.file("empty.txt"), "");
  CHECK(build_occupancy(dir.file("empty.txt"), cfg).empty());

  // Occupancy file round trip, including infinite endpoint distances.
  const auto back = parse_occupancy(format_occupancy(built));
  CHECK(format_occupancy(back) == format_occupancy(built));
}

TEST_CASE("grid origin is the floored bounding-box minimum") {
  const std::vector<Ray> rays = {{{0.26, -0.31, 1.04}, {2, 2, 2}}};
  const Point3 g = grid_origin_for(rays, {}, 0.1);
  CHECK(g.x == doctest::Approx(0.2));
  CHECK(g.y == doctest::Approx(-0.4));
  CHECK(g.z == doctest::Approx(1.0));
}

TEST_CASE("config validation") {
  OccupancyConfig cfg;
  cfg.voxel_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.l_hit = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.prior = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
