#pragma once

// Small shared scenes for the unit tests.

#include <filesystem>
#include <string>

#include "lod3/model_io.hpp"

namespace fixture {

using namespace lod3;

// Axis-aligned box [x0,x1] x [y0,y1] x [z0,z1]; faces counter-clockwise about
// their outward normals. Face ids: xmin xmax ymin ymax zmin zmax.
inline BuildingSolid box(double x0, double y0, double z0, double x1, double y1, double z1,
                         std::string id = "box") {
  auto face = [](std::string fid, SurfaceLabel label, std::vector<Point3> v) {
    return Face{std::move(fid), Ring{std::move(v)}, {}, label};
  };
  BuildingSolid b;
  b.id = std::move(id);
  b.lod = 2;
  b.faces = {
      face("xmin", SurfaceLabel::Wall, {{x0, y0, z0}, {x0, y0, z1}, {x0, y1, z1}, {x0, y1, z0}}),
      face("xmax", SurfaceLabel::Wall, {{x1, y0, z0}, {x1, y1, z0}, {x1, y1, z1}, {x1, y0, z1}}),
      face("ymin", SurfaceLabel::Wall, {{x0, y0, z0}, {x1, y0, z0}, {x1, y0, z1}, {x0, y0, z1}}),
      face("ymax", SurfaceLabel::Wall, {{x0, y1, z0}, {x0, y1, z1}, {x1, y1, z1}, {x1, y1, z0}}),
      face("zmin", SurfaceLabel::Ground, {{x0, y0, z0}, {x0, y1, z0}, {x1, y1, z0}, {x1, y0, z0}}),
      face("zmax", SurfaceLabel::Roof, {{x0, y0, z1}, {x1, y0, z1}, {x1, y1, z1}, {x0, y1, z1}}),
  };
  return b;
}

inline BuildingSolid unit_cube() { return box(0, 0, 0, 1, 1, 1, "cube"); }

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("lod3_test_" + name);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace fixture
