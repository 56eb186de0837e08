// Per-stage cost at 640x480 on the bundled two-box scene.
#include <benchmark/benchmark.h>

#include <filesystem>

#include "objmap/data_association.h"
#include "objmap/depth_segmentation.h"
#include "objmap/pipeline.h"
#include "objmap/synth.h"
#include "objmap/tsdf_integrator.h"

namespace objmap {
namespace {

struct Fixture {
  SceneSpec scene;
  RenderedFrame frame;
  MaskFrame masks;
  PipelineConfig config;

  Fixture() {
    scene = load_scene(std::filesystem::path(OBJMAP_SOURCE_DIR) / "scenes" /
                       "two_boxes.json");
    CameraIntrinsics& intr = scene.intrinsics;
    const double scale = 640.0 / intr.width;
    intr = {intr.fx * scale, intr.fy * scale, (intr.cx + 0.5) * scale - 0.5,
            (intr.cy + 0.5) * scale - 0.5, 640, 480};
    config.map.voxel_size = 0.01;
    frame = render_depth(scene, scene.trajectory[0]);
    masks = ground_truth_masks(scene, frame);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_Normals(benchmark::State& state) {
  const Fixture& f = fixture();
  const VertexMap vmap = unproject(f.frame.depth, f.scene.intrinsics);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_normals(vmap));
}
BENCHMARK(BM_Normals)->Unit(benchmark::kMillisecond);

void BM_Segmentation(benchmark::State& state) {
  const Fixture& f = fixture();
  const VertexMap vmap = unproject(f.frame.depth, f.scene.intrinsics);
  const NormalMap nmap = estimate_normals(vmap);
  for (auto _ : state) {
    benchmark::DoNotOptimize(segment_frame(vmap, nmap, f.config.segmentation));
  }
}
BENCHMARK(BM_Segmentation)->Unit(benchmark::kMillisecond);

void BM_Integration(benchmark::State& state) {
  const Fixture& f = fixture();
  const Image<Label> labels(640, 480, 1);
  for (auto _ : state) {
    SegmentMap map(f.config.map);
    integrate_frame(map, f.frame.depth, f.scene.trajectory[0], f.scene.intrinsics,
                    labels, f.config.integrator);
    benchmark::DoNotOptimize(map.grid().block_count());
  }
}
BENCHMARK(BM_Integration)->Unit(benchmark::kMillisecond);

void BM_Association(benchmark::State& state) {
  const Fixture& f = fixture();
  MappingSession session(f.scene.intrinsics, f.config);
  PreprocessedFrame first =
      preprocess_frame(f.frame.depth, &f.masks, f.scene.intrinsics, f.config);
  first.pose = f.scene.trajectory[0];
  session.process(first);
  const PreprocessedFrame frame =
      preprocess_frame(f.frame.depth, &f.masks, f.scene.intrinsics, f.config);
  for (auto _ : state) {
    PersistentLabels labels = session.map().labels();
    const auto overlaps =
        compute_3d_overlaps(frame.segments, session.map(), f.scene.trajectory[0]);
    benchmark::DoNotOptimize(
        associate_segments(overlaps, frame.segments, labels));
  }
}
BENCHMARK(BM_Association)->Unit(benchmark::kMillisecond);

void BM_FullFrame(benchmark::State& state) {
  const Fixture& f = fixture();
  MappingSession session(f.scene.intrinsics, f.config);
  size_t k = 0;
  for (auto _ : state) {
    const RigidPose& pose = f.scene.trajectory[k++ % f.scene.trajectory.size()];
    state.PauseTiming();
    const RenderedFrame r = render_depth(f.scene, pose);
    const MaskFrame masks = ground_truth_masks(f.scene, r);
    state.ResumeTiming();
    PreprocessedFrame frame =
        preprocess_frame(r.depth, &masks, f.scene.intrinsics, f.config);
    frame.pose = pose;
    benchmark::DoNotOptimize(session.process(frame));
  }
}
BENCHMARK(BM_FullFrame)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace objmap

BENCHMARK_MAIN();
