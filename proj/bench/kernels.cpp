// Serial reference kernels against their OpenMP counterparts on the synthetic
// scene. Set OMP_NUM_THREADS to compare thread counts.

#include <benchmark/benchmark.h>

#include <random>

#include "lod3/evaluate.hpp"
#include "lod3/extraction.hpp"
#include "lod3/fusion.hpp"
#include "lod3/occupancy.hpp"
#include "lod3/rasters.hpp"
#include "lod3/reference.hpp"
#include "lod3/synth.hpp"
#include "lod3/visibility.hpp"

using namespace lod3;

namespace {

struct Fixture {
  SynthScene scene;
  OccupancyConfig occ;
  Point3 grid_origin;
  FacadeFrame frame;
  FacadeRaster conflict, pc, tex;
  Mask mask;

  Fixture() {
    SynthSpec spec = SynthSpec::defaults();
    scene = synth_scene(spec);
    std::vector<Point3> corners;
    for (const auto& f : scene.solid.faces)
      for (const auto& p : f.outer.vertices) corners.push_back(p);
    grid_origin = grid_origin_for(scene.rays, corners, occ.voxel_size);
    const Face& front = *scene.solid.find_face(kSynthFrontFace);
    frame = make_face_frame(front, occ.voxel_size);

    OccupancyTree tree(occ, grid_origin);
    integrate_rays(tree, scene.rays);
    conflict = project_conflict_map(classify_surface_voxels(tree, scene.solid, {}), front, frame, grid_origin,
                                    occ.voxel_size);
    pc = project_point_probabilities(scene.points, frame, 3 * occ.voxel_size);
    tex = project_image_probabilities(scene.texture, scene.correspondences, frame);

    std::mt19937 rng(1);
    std::bernoulli_distribution on(0.6);
    mask = Mask(512, 512);
    for (auto& c : mask.cells) c = on(rng);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

template <bool Parallel>
void BM_IntegrateRays(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    OccupancyTree tree(f.occ, f.grid_origin);
    if constexpr (Parallel)
      integrate_rays(tree, f.scene.rays);
    else
      reference::integrate_rays(tree, f.scene.rays);
    benchmark::DoNotOptimize(tree.leaves().size());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.scene.rays.size()));
}

template <bool Parallel>
void BM_ClassifySurface(benchmark::State& state) {
  const auto& f = fixture();
  OccupancyTree tree(f.occ, f.grid_origin);
  integrate_rays(tree, f.scene.rays);
  for (auto _ : state) {
    auto out = Parallel ? classify_surface_voxels(tree, f.scene.solid, {})
                        : reference::classify_surface_voxels(tree, f.scene.solid, {});
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_ProjectPoints(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    auto r = Parallel ? project_point_probabilities(f.scene.points, f.frame, 0.3)
                      : reference::project_point_probabilities(f.scene.points, f.frame, 0.3);
    benchmark::DoNotOptimize(r.at(0, 0, 0));
  }
}

template <bool Parallel>
void BM_Fuse(benchmark::State& state) {
  const auto& f = fixture();
  const Cpt cpt = Cpt::defaults();
  for (auto _ : state) {
    auto r = Parallel ? fuse_maps(&f.conflict, &f.pc, &f.tex, cpt) : reference::fuse_maps(&f.conflict, &f.pc, &f.tex, cpt);
    benchmark::DoNotOptimize(r.at(0, 0, 0));
  }
}

template <bool Parallel>
void BM_Opening(benchmark::State& state) {
  const auto& f = fixture();
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto m = Parallel ? morphological_opening(f.mask, k) : reference::morphological_opening(f.mask, k);
    benchmark::DoNotOptimize(m.cells.data());
  }
}

template <bool Parallel>
void BM_MeshDeviation(benchmark::State& state) {
  const auto& f = fixture();
  const auto mesh = f.scene.gt_lod3.mesh();
  const auto samples = sample_surface(f.scene.solid.mesh(), 0.1);
  for (auto _ : state) {
    auto d = Parallel ? mesh_deviation(samples, mesh) : reference::mesh_deviation(samples, mesh);
    benchmark::DoNotOptimize(d.rms);
  }
}

}  // namespace

BENCHMARK(BM_IntegrateRays<false>)->Name("integrate_rays/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IntegrateRays<true>)->Name("integrate_rays/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassifySurface<false>)->Name("classify_surface/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassifySurface<true>)->Name("classify_surface/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProjectPoints<false>)->Name("project_points/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProjectPoints<true>)->Name("project_points/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Fuse<false>)->Name("fuse/serial")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Fuse<true>)->Name("fuse/omp")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Opening<false>)->Name("opening/serial")->Arg(3)->Arg(9)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Opening<true>)->Name("opening/omp")->Arg(3)->Arg(9)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeshDeviation<false>)->Name("mesh_deviation/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeshDeviation<true>)->Name("mesh_deviation/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
