#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "lod3/errors.hpp"
#include "lod3/reference.hpp"
#include "lod3/synth.hpp"
#include "lod3/visibility.hpp"

using namespace lod3;

TEST_CASE("positioning probability") {
  CHECK(positioning_probability(0, 3, 0.1) == doctest::Approx(0.1324).epsilon(1e-3));
  CHECK(positioning_probability(0, 3, 0.1) ==
        doctest::Approx(oracle::phi(1.0 / 6.0) - oracle::phi(-1.0 / 6.0)).epsilon(1e-14));
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(-2, 2), s(0.2, 5), vs(0.01, 1);
  for (int i = 0; i < 500; ++i) {
    const double dd = d(rng), ss = s(rng), vv = vs(rng);
    CHECK(positioning_probability(dd, ss, vv) == doctest::Approx(positioning_probability(-dd, ss, vv)));
    CHECK(positioning_likelihood(std::abs(dd), ss, vv) >= positioning_likelihood(std::abs(dd) + 0.1, ss, vv));
  }
  CHECK(positioning_likelihood(0, 3, 0.1) == 1.0);
  CHECK(positioning_likelihood(10, 3, 0.1) < 1e-6);
  CHECK_THROWS_AS(positioning_probability(0, 0, 0.1), DomainError);
  CHECK_THROWS_AS(positioning_probability(0, -1, 0.1), DomainError);
}

TEST_CASE("joint state") {
  CHECK(joint_state_probability(1, 1).confirmed == 1.0);
  CHECK(joint_state_probability(1, 1).conflicted == 0.0);
  CHECK(joint_state_probability(0.5, 0.5).confirmed == doctest::Approx(0.25));
  CHECK(joint_state_probability(0.5, 0.5).conflicted == doctest::Approx(0.75));
  CHECK(joint_state_probability(0, 0.9).conflicted == 1.0);
}

TEST_CASE("property: conflict probability grows with both distances") {
  const UncertaintyConfig u;
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> d(0, 0.6), step(0, 0.2);
  for (int i = 0; i < 1000; ++i) {
    const double a = d(rng), b = d(rng), da = step(rng), db = step(rng);
    const auto base = surface_voxel_probability(a, b, u, 0.1);
    CHECK(surface_voxel_probability(a + da, b, u, 0.1).conflicted >= base.conflicted - 1e-12);
    CHECK(surface_voxel_probability(a, b + db, u, 0.1).conflicted >= base.conflicted - 1e-12);
    CHECK(base.confirmed + base.conflicted == doctest::Approx(1.0));
  }
  // A voxel only ever crossed by rays has no usable endpoint: fully conflicted.
  CHECK(surface_voxel_probability(0, std::numeric_limits<double>::infinity(), u, 0.1).conflicted == 1.0);
}

TEST_CASE("absolute and relative uncertainty units agree") {
  UncertaintyConfig rel;
  UncertaintyConfig abs;
  abs.absolute_units = true;
  abs.sigma_model = rel.sigma_model * 0.1;
  abs.sigma_cloud = rel.sigma_cloud * 0.1;
  for (double a : {0.0, 0.03, 0.2})
    for (double b : {0.0, 0.07, 0.4})
      CHECK(surface_voxel_probability(a, b, rel, 0.1).confirmed ==
            doctest::Approx(surface_voxel_probability(a, b, abs, 0.1).confirmed));
}

TEST_CASE("surface voxels: one layer, tie goes behind the face") {
  const auto cube = fixture::unit_cube();
  const Point3 g{0, 0, 0};
  const auto xmin = face_voxels(cube.faces[0], g, 0.1);
  CHECK(xmin.size() == 100);
  CHECK(std::all_of(xmin.begin(), xmin.end(), [](const VoxelKey& k) { return k.ix == 0; }));
  const auto xmax = face_voxels(cube.faces[1], g, 0.1);
  CHECK(xmax.size() == 100);
  CHECK(std::all_of(xmax.begin(), xmax.end(), [](const VoxelKey& k) { return k.ix == 9; }));

  // Off-lattice face: one voxel layer, and the partial boundary cells count.
  const auto off = fixture::box(0.05, 0.05, 0.05, 1.05, 1.05, 1.05);
  const auto v = face_voxels(off.faces[0], g, 0.1);
  CHECK(v.size() == 121);
  CHECK(std::all_of(v.begin(), v.end(), [](const VoxelKey& k) { return k.ix == 0; }));

  // Every face of the cube contributes; shared edge voxels appear once per face.
  const auto all = surface_voxels(cube, g, 0.1);
  CHECK(all.size() == 600);
  CHECK(std::is_sorted(all.begin(), all.end(), [](const SurfaceVoxel& a, const SurfaceVoxel& b) {
    return a.key != b.key ? a.key < b.key : a.face_id < b.face_id;
  }));
}

TEST_CASE("face voxels of a slanted face touch the face") {
  // Triangle in the plane x + y + z = 1.5 inside a 1 m cube of 0.1 m voxels.
  Face f{"slant", Ring{{{1.5, 0, 0}, {0, 1.5, 0}, {0, 0, 1.5}}}, {}, SurfaceLabel::Roof};
  const auto keys = face_voxels(f, {0, 0, 0}, 0.1);
  REQUIRE(!keys.empty());
  for (const auto& k : keys) {
    // The plane must pass through the voxel: corner sums straddle 1.5.
    const double lo = 0.1 * (k.ix + k.iy + k.iz);
    CHECK(lo < 1.5);
    CHECK(lo + 0.3 > 1.5);
  }
}

namespace {

SynthSpec one_window() {
  SynthSpec s = SynthSpec::defaults();
  s.openings = {{OpeningLabel::Window, {2.0, 1.0, 3.5, 2.5}}};
  s.noise_sigma = 0.0;
  s.ray_density = 1000;
  s.glass_density = 0;
  return s;
}

}  // namespace

TEST_CASE("conflict map on a wall with one see-through window") {
  const SynthSpec spec = one_window();
  const auto scene = synth_scene(spec);
  OccupancyConfig oc;
  std::vector<Point3> corners;
  for (const auto& f : scene.solid.faces)
    for (const auto& p : f.outer.vertices) corners.push_back(p);
  OccupancyTree tree(oc, grid_origin_for(scene.rays, corners, oc.voxel_size));
  integrate_rays(tree, scene.rays);
  const UncertaintyConfig u;
  const auto classes = classify_surface_voxels(tree, scene.solid, u);
  CHECK(classes == reference::classify_surface_voxels(tree, scene.solid, u));

  const Face& front = scene.solid.faces[0];
  const auto frame = make_face_frame(front, oc.voxel_size);
  const auto map = project_conflict_map(classes, front, frame, tree.grid_origin(), oc.voxel_size);
  CHECK(map.channels() == std::vector<std::string>{"conflicted", "confirmed", "unknown"});

  // Channel encoding: unknown pixels are (0, 0, 1); measured ones sum to 1.
  for (int r = 0; r < map.rows(); ++r)
    for (int c = 0; c < map.cols(); ++c) {
      const float a = map.at(r, c, 0), b = map.at(r, c, 1), k = map.at(r, c, 2);
      if (k == 1.0f) {
        CHECK((a == 0.0f && b == 0.0f));
      } else {
        CHECK(k == 0.0f);
        CHECK(a + b == doctest::Approx(1.0).epsilon(1e-6));
      }
    }

  // Conflicts sit on the window, to within one cell of its outline. Voxels on
  // the outline are grazed by wall hits just outside it and may read confirmed.
  int inside_conflicted = 0, inside = 0, outside_conflicted = 0;
  for (int r = 0; r < map.rows(); ++r)
    for (int c = 0; c < map.cols(); ++c) {
      const Point3 p = uv_to_world(frame, {(c + 0.5) * frame.cell, (r + 0.5) * frame.cell});
      const bool in = p.x > 2.1 && p.x < 3.4 && p.z > 1.1 && p.z < 2.4;
      const bool near = p.x > 1.9 && p.x < 3.6 && p.z > 0.9 && p.z < 2.6;
      const bool confl = map.at(r, c, 0) > 0.5f;
      if (in) {
        ++inside;
        inside_conflicted += confl;
      } else if (!near) {
        outside_conflicted += confl;
      }
    }
  CHECK(inside > 0);
  CHECK(inside_conflicted == inside);
  CHECK(outside_conflicted == 0);
}

TEST_CASE("wall without openings has no conflicts") {
  SynthSpec spec = one_window();
  spec.openings.clear();
  const auto scene = synth_scene(spec);
  OccupancyConfig oc;
  std::vector<Point3> corners;
  for (const auto& p : scene.solid.faces[0].outer.vertices) corners.push_back(p);
  OccupancyTree tree(oc, grid_origin_for(scene.rays, corners, oc.voxel_size));
  integrate_rays(tree, scene.rays);
  const auto classes = classify_surface_voxels(tree, scene.solid, {});
  const auto frame = make_face_frame(scene.solid.faces[0], oc.voxel_size);
  const auto map = project_conflict_map(classes, scene.solid.faces[0], frame, tree.grid_origin(), oc.voxel_size);
  int conflicted = 0;
  for (int r = 0; r < map.rows(); ++r)
    for (int c = 0; c < map.cols(); ++c) conflicted += map.at(r, c, 0) > 0.5f;
  CHECK(conflicted == 0);
}

TEST_CASE("uncertainty config validation") {
  UncertaintyConfig u;
  u.sigma_model = 0;
  CHECK_THROWS_AS(u.validate(), ConfigError);
  u = {};
  u.sigma_cloud = -1;
  CHECK_THROWS_AS(u.validate(), ConfigError);
}
