#include <doctest.h>

#include <algorithm>
#include <random>

#include "../fixtures.hpp"
#include "lod3/errors.hpp"
#include "lod3/model_io.hpp"
#include "lod3/text.hpp"

using namespace lod3;

namespace {

std::size_t count_kind(const std::vector<Violation>& v, ViolationKind k) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](const Violation& x) { return x.kind == k; }));
}

}  // namespace

TEST_CASE("unit cube is a valid solid") {
  const auto cube = fixture::unit_cube();
  CHECK(validate_solid(cube).empty());
  CHECK(enclosed_volume(cube.mesh()) == doctest::Approx(1.0).epsilon(1e-12));
  const auto parsed = parse_solid(format_solid(cube));
  CHECK(parsed.faces.size() == 6);
  CHECK(validate_solid(parsed).empty());
}

TEST_CASE("cube with a face removed has open edges") {
  auto cube = fixture::unit_cube();
  cube.faces.pop_back();
  const auto v = validate_solid(cube);
  CHECK(count_kind(v, ViolationKind::NonManifoldEdge) == 4);
  fixture::TempDir dir("open_cube");
  write_solid(cube, dir.file("open.txt"));
  CHECK_THROWS_AS(read_solid(dir.file("open.txt")), ValidationError);
}

TEST_CASE("vertex perturbed out of plane by 10 eps_plane is non-planar") {
  auto cube = fixture::unit_cube();
  // Move one vertex of the xmin face along its normal only; the neighbouring
  // faces keep the vertex position they share, so only planarity breaks for
  // this face and the edges no longer weld.
  cube.faces[0].outer.vertices[2].x -= 10 * kPlaneEps;
  const auto v = validate_face(cube.faces[0]);
  CHECK(count_kind(v, ViolationKind::NonPlanarFace) == 1);
  fixture::TempDir dir("bent_cube");
  write_solid(cube, dir.file("bent.txt"));
  CHECK_THROWS_AS(read_solid(dir.file("bent.txt")), ValidationError);
}

TEST_CASE("two disjoint triangles: six open edges") {
  BuildingSolid s;
  s.id = "tris";
  s.faces = {Face{"a", Ring{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}}, {}, SurfaceLabel::Wall},
             Face{"b", Ring{{{5, 0, 0}, {6, 0, 0}, {5, 1, 0}}}, {}, SurfaceLabel::Wall}};
  CHECK(count_kind(validate_solid(s), ViolationKind::NonManifoldEdge) == 6);
}

TEST_CASE("hole without filler geometry: four open edges") {
  auto cube = fixture::unit_cube();
  // Clockwise about the -x normal of face xmin.
  cube.faces[0].inner.push_back(Ring{{{0, 0.4, 0.4}, {0, 0.6, 0.4}, {0, 0.6, 0.6}, {0, 0.4, 0.6}}});
  const auto v = validate_solid(cube);
  CHECK(count_kind(v, ViolationKind::NonManifoldEdge) == 4);
  CHECK(v.size() == 4);
}

TEST_CASE("solid text round trip") {
  auto cube = fixture::box(0.5, -1.25, 3, 2.75, 4.125, 9.5, "b1");
  cube.lod = 2;
  fixture::TempDir dir("roundtrip");
  write_solid(cube, dir.file("b.txt"));
  const auto back = read_solid(dir.file("b.txt"));
  REQUIRE(back.faces.size() == cube.faces.size());
  CHECK(back.id == cube.id);
  CHECK(back.lod == cube.lod);
  for (std::size_t i = 0; i < cube.faces.size(); ++i) {
    CHECK(back.faces[i].id == cube.faces[i].id);
    CHECK(back.faces[i].label == cube.faces[i].label);
    CHECK(back.faces[i].outer == cube.faces[i].outer);
  }
}

TEST_CASE("solid parse errors") {
  CHECK_THROWS_AS(parse_solid("face a label=Wall\n"), ParseError);
  CHECK_THROWS_AS(parse_solid("solid s lod=2\nface a label=Attic\nouter 0 0 0 1 0 0 0 1 0\nend\n"), ParseError);
  CHECK_THROWS_AS(parse_solid("solid s lod=2\nface a label=Wall\nouter 0 0 0 1 0\nend\n"), ParseError);
  CHECK_THROWS_AS(parse_solid("solid s lod=2\nface a label=Wall\nouter 0 0 0 1 0 0 0 1 0\n"), ParseError);
  CHECK_THROWS_AS(read_solid("/nonexistent/solid.txt"), IoError);
}

TEST_CASE("template library") {
  const std::string lib =
      "template panel label=Window depth=0\n"
      "tri 0 0 0 1 0 0 1 1 0\n"
      "tri 0 0 0 1 1 0 0 1 0\n"
      "anchor 0 0 0 1 0 0 1 1 0 0 1 0\n"
      "end\n";
  const auto t = parse_template_library(lib);
  REQUIRE(t.size() == 1);
  CHECK(t[0].label == OpeningLabel::Window);
  CHECK(validate_template(t[0]).empty());
  CHECK(parse_template_library(format_template_library(t)).size() == 1);

  const std::string open =
      "template broken label=Door depth=0\n"
      "tri 0 0 0 1 0 0 1 1 0\n"
      "anchor 0 0 0 1 0 0 1 1 0 0 1 0\n"
      "end\n";
  CHECK_THROWS_AS(parse_template_library(open), ValidationError);
  CHECK(validate_template(flat_panel_template("p", OpeningLabel::Door)).empty());
}

TEST_CASE("labels parse case-insensitively for openings") {
  CHECK(parse_opening_label("window") == OpeningLabel::Window);
  CHECK(parse_opening_label("DOOR") == OpeningLabel::Door);
  CHECK_THROWS_AS(parse_opening_label("arch"), ParseError);
}

TEST_CASE("property: random boxes are valid with positive volume, and survive a round trip") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> pos(-50, 50), ext(0.1, 20);
  for (int i = 0; i < 200; ++i) {
    const double x = pos(rng), y = pos(rng), z = pos(rng);
    const double w = ext(rng), d = ext(rng), h = ext(rng);
    const auto b = fixture::box(x, y, z, x + w, y + d, z + h);
    CHECK(validate_solid(b).empty());
    CHECK(enclosed_volume(b.mesh()) == doctest::Approx(w * d * h).epsilon(1e-9));
    const auto back = parse_solid(format_solid(b));
    for (std::size_t f = 0; f < b.faces.size(); ++f) CHECK(back.faces[f].outer == b.faces[f].outer);
  }
}
