#ifndef OBJMAP_PIPELINE_H_
#define OBJMAP_PIPELINE_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "objmap/data_association.h"
#include "objmap/dataset.h"
#include "objmap/depth_segmentation.h"
#include "objmap/instance_ingest.h"
#include "objmap/tsdf_integrator.h"
#include "objmap/volumetric_map.h"

namespace objmap {

struct PipelineConfig {
  MapConfig map;
  SegmentationConfig segmentation;
  IntegratorConfig integrator;
  double min_instance_overlap = kDefaultMinInstanceOverlap;  // τ_p
  double min_segment_overlap = kDefaultMinSegmentOverlap;    // τ_π
  // Every frame_stride-th frame of the sequence is processed.
  int frame_stride = 1;
  // Every point_stride-th pixel of a segment feeds the 3D overlap count.
  int point_stride = 1;
  // Preprocessing workers; 0 runs everything on the calling thread.
  int preprocess_threads = 1;
  size_t queue_capacity = 4;
  bool use_masks = true;
  // Drop frames by wall clock, as if they arrived at realtime_hz.
  bool realtime = false;
  double realtime_hz = 1.0;

  void validate() const;
};

// Milliseconds per stage of one frame. Stages are timed back to back, so
// their sum equals total().
struct StageTimes {
  double load = 0;
  double normals = 0;
  double segmentation = 0;
  double refinement = 0;
  double association = 0;
  double integration = 0;
  double counts = 0;

  double total() const {
    return load + normals + segmentation + refinement + association +
           integration + counts;
  }
};

// Everything computed for a frame before the map is touched.
struct PreprocessedFrame {
  size_t index = 0;
  std::string id;
  RigidPose pose;
  Image<float> depth;
  std::vector<FrameSegment> segments;
  std::vector<InstanceId> instances;  // frame instances in use
  StageTimes times;
};

// Segmentation and refinement of one frame. `masks` may be null.
PreprocessedFrame preprocess_frame(const Image<float>& depth,
                                   const MaskFrame* masks,
                                   const CameraIntrinsics& intr,
                                   const PipelineConfig& config);

// Loads depth (and masks when enabled) from the dataset, then preprocesses.
// Throws when the frame is unreadable.
PreprocessedFrame preprocess_frame(const Dataset& dataset, size_t index,
                                   const PipelineConfig& config);

struct FrameResult {
  std::string id;
  std::vector<Label> labels;  // L_t, parallel to the frame's segments
  std::vector<bool> matched;
  InstanceMapping instances;  // I_t
  IntegrationStats integration;
};

// The single-writer half of the pipeline: associate, integrate and update
// counts, strictly in the order frames are handed in.
class MappingSession {
 public:
  MappingSession(const CameraIntrinsics& intr, const PipelineConfig& config);

  FrameResult process(PreprocessedFrame& frame);

  const SegmentMap& map() const { return map_; }
  SegmentMap& map() { return map_; }

 private:
  CameraIntrinsics intr_;
  PipelineConfig config_;
  SegmentMap map_;
};

// One JSON line of frame_log.jsonl.
std::string frame_log_line(const PreprocessedFrame& frame,
                           const FrameResult& result);

struct RunSummary {
  size_t frames_total = 0;
  size_t frames_selected = 0;
  size_t frames_integrated = 0;
  // Frames discarded by the wall-clock emulation in realtime mode.
  size_t frames_dropped = 0;
  std::vector<std::string> frames_skipped;
  size_t segments = 0;
  size_t instances = 0;
  double wall_seconds = 0;
};

// Runs the dataset into `out_dir`, writing map.objmap, timing.csv,
// frame_log.jsonl and summary.json. `progress` is called after each frame.
RunSummary run_pipeline(
    const Dataset& dataset, const PipelineConfig& config,
    const std::filesystem::path& out_dir,
    const std::function<void(const FrameResult&, size_t done, size_t total)>&
        progress = {});

struct ExportOptions {
  bool mesh = true;
  bool segments = true;
  bool counts = true;
};

struct ExportSummary {
  size_t triangles = 0;
  size_t instance_meshes = 0;
  size_t segments = 0;
};

// mesh.ply and instances/instance_<id>.ply; segments.csv; phi.csv, psi.csv.
ExportSummary export_map(const SegmentMap& map,
                         const std::filesystem::path& out_dir,
                         const ExportOptions& options = {});

}  // namespace objmap

#endif  // OBJMAP_PIPELINE_H_
