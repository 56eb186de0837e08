#include "objmap/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <glog/logging.h>
#include <json.hpp>

#include "objmap/map_io.h"
#include "objmap/marching_cubes.h"
#include "objmap/mesh_io.h"

namespace objmap {
namespace {

using Clock = std::chrono::steady_clock;

// Returns milliseconds since `last` and moves `last` to now, so consecutive
// laps tile the elapsed time without gaps.
double lap(Clock::time_point& last) {
  const auto now = Clock::now();
  const double ms =
      std::chrono::duration<double, std::milli>(now - last).count();
  last = now;
  return ms;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

struct Slot {
  std::optional<PreprocessedFrame> frame;
  std::string error;
};

Slot preprocess_slot(const Dataset& dataset, size_t index,
                     const PipelineConfig& config) {
  Slot slot;
  try {
    slot.frame = preprocess_frame(dataset, index, config);
  } catch (const Error& e) {
    slot.error = e.what();
  }
  return slot;
}

// Ordered producer side of the two-stage pipeline: workers preprocess frames
// ahead of the consumer, at most `capacity` frames beyond it.
class PreprocessQueue {
 public:
  PreprocessQueue(const Dataset& dataset, const PipelineConfig& config,
                  std::vector<size_t> frames)
      : dataset_(dataset), config_(config), frames_(std::move(frames)) {
    for (int i = 0; i < config.preprocess_threads; ++i) {
      workers_.emplace_back([this] { work(); });
    }
  }

  ~PreprocessQueue() {
    {
      std::lock_guard lock(mutex_);
      abort_ = true;
    }
    space_.notify_all();
    for (auto& w : workers_) w.join();
  }

  Slot take(size_t position) {
    std::unique_lock lock(mutex_);
    ready_cv_.wait(lock, [&] { return ready_.contains(position); });
    Slot slot = std::move(ready_[position]);
    ready_.erase(position);
    consumed_ = position + 1;
    space_.notify_all();
    return slot;
  }

 private:
  void work() {
    for (;;) {
      size_t position;
      {
        std::unique_lock lock(mutex_);
        space_.wait(lock, [&] {
          return abort_ || claimed_ >= frames_.size() ||
                 claimed_ < consumed_ + config_.queue_capacity;
        });
        if (abort_ || claimed_ >= frames_.size()) return;
        position = claimed_++;
      }
      Slot slot = preprocess_slot(dataset_, frames_[position], config_);
      {
        std::lock_guard lock(mutex_);
        ready_[position] = std::move(slot);
      }
      ready_cv_.notify_all();
    }
  }

  const Dataset& dataset_;
  const PipelineConfig& config_;
  std::vector<size_t> frames_;
  std::mutex mutex_;
  std::condition_variable space_;
  std::condition_variable ready_cv_;
  std::map<size_t, Slot> ready_;
  size_t claimed_ = 0;
  size_t consumed_ = 0;
  bool abort_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace

void PipelineConfig::validate() const {
  map.validate();
  segmentation.validate();
  integrator.validate();
  if (!(min_instance_overlap > 0 && min_instance_overlap < 1)) {
    throw Error("min instance overlap must lie in (0, 1)");
  }
  if (!(min_segment_overlap > 0)) {
    throw Error("min segment overlap must be positive");
  }
  if (frame_stride < 1) throw Error("frame stride must be >= 1");
  if (point_stride < 1) throw Error("point stride must be >= 1");
  if (preprocess_threads < 0) throw Error("thread count must be >= 0");
  if (queue_capacity < 1) throw Error("queue capacity must be >= 1");
  if (realtime && !(realtime_hz > 0)) throw Error("realtime rate must be > 0");
}

PreprocessedFrame preprocess_frame(const Image<float>& depth,
                                   const MaskFrame* masks,
                                   const CameraIntrinsics& intr,
                                   const PipelineConfig& config) {
  PreprocessedFrame frame;
  auto t = Clock::now();
  const VertexMap vmap = unproject(depth, intr, config.integrator.max_range);
  const NormalMap nmap = estimate_normals(vmap);
  frame.times.normals = lap(t);
  FrameSegmentation seg =
      segment_frame(vmap, nmap, config.segmentation, config.point_stride);
  frame.segments = std::move(seg.segments);
  frame.times.segmentation = lap(t);
  if (masks != nullptr) {
    if (!masks->ids.same_shape(depth)) {
      throw DimensionError("mask raster and depth frame differ in size");
    }
    const OverlapTable overlaps = compute_overlaps(seg.regions, *masks);
    frame.instances = refine_segments(frame.segments, overlaps, *masks,
                                      config.min_instance_overlap);
  }
  frame.times.refinement = lap(t);
  frame.depth = depth;
  return frame;
}

PreprocessedFrame preprocess_frame(const Dataset& dataset, size_t index,
                                   const PipelineConfig& config) {
  const std::string& id = dataset.frames().at(index);
  const CameraIntrinsics& intr = dataset.intrinsics();
  auto t = Clock::now();
  const Image<float> depth = dataset.load_depth(id);
  std::optional<MaskFrame> masks;
  if (config.use_masks) {
    masks = load_masks(dataset.masks_dir(), id, intr.width, intr.height);
  }
  const double load_ms = lap(t);
  PreprocessedFrame frame =
      preprocess_frame(depth, masks ? &*masks : nullptr, intr, config);
  frame.index = index;
  frame.id = id;
  frame.pose = dataset.pose(id);
  frame.times.load = load_ms;
  return frame;
}

MappingSession::MappingSession(const CameraIntrinsics& intr,
                               const PipelineConfig& config)
    : intr_(intr), config_(config), map_(config.map) {
  intr_.validate();
  config_.validate();
}

FrameResult MappingSession::process(PreprocessedFrame& frame) {
  FrameResult result;
  result.id = frame.id;
  auto t = Clock::now();
  const SegmentOverlapTable overlaps =
      compute_3d_overlaps(frame.segments, map_, frame.pose);
  SegmentAssociation assoc =
      associate_segments(overlaps, frame.segments, map_.labels(),
                         config_.min_segment_overlap);
  result.labels = std::move(assoc.labels);
  result.matched = std::move(assoc.matched);
  result.instances = associate_instances(frame.segments, result.labels,
                                         map_.counts(), map_.labels());
  frame.times.association = lap(t);
  result.integration =
      integrate_frame(map_, frame.depth, frame.pose, intr_, frame.segments,
                      result.labels, config_.integrator);
  frame.times.integration = lap(t);
  map_.update_counts(frame.segments, result.labels, result.instances);
  frame.times.counts = lap(t);
  return result;
}

std::string frame_log_line(const PreprocessedFrame& frame,
                           const FrameResult& result) {
  nlohmann::ordered_json line;
  line["index"] = frame.index;
  line["frame"] = frame.id;
  auto segments = nlohmann::ordered_json::array();
  for (size_t i = 0; i < frame.segments.size(); ++i) {
    const FrameSegment& s = frame.segments[i];
    auto it = result.instances.find(s.instance);
    segments.push_back({
        {"region", s.region.id},
        {"pixels", s.pixel_count()},
        {"label", result.labels[i]},
        {"matched", static_cast<bool>(result.matched[i])},
        {"local_instance", s.instance},
        {"instance", it == result.instances.end() ? 0u : it->second},
        {"class_id", s.class_id},
    });
  }
  line["segments"] = std::move(segments);
  return line.dump();
}

RunSummary run_pipeline(
    const Dataset& dataset, const PipelineConfig& config,
    const std::filesystem::path& out_dir,
    const std::function<void(const FrameResult&, size_t, size_t)>& progress) {
  config.validate();
  const auto start = Clock::now();
  std::filesystem::create_directories(out_dir);

  RunSummary summary;
  summary.frames_total = dataset.frames().size();
  std::vector<size_t> selected;
  for (size_t k = 0; k < dataset.frames().size(); k += config.frame_stride) {
    selected.push_back(k);
  }
  summary.frames_selected = selected.size();

  MappingSession session(dataset.intrinsics(), config);
  std::ofstream timing = open_output(out_dir / "timing.csv");
  std::ofstream log = open_output(out_dir / "frame_log.jsonl");
  timing << "frame,load_ms,normals_ms,segmentation_ms,refinement_ms,"
            "association_ms,integration_ms,counts_ms,total_ms\n";

  auto consume = [&](Slot slot, size_t position) {
    if (!slot.frame) {
      const std::string& id = dataset.frames()[selected[position]];
      LOG(WARNING) << "skipping unreadable frame " << id << ": " << slot.error;
      summary.frames_skipped.push_back(id);
      return;
    }
    PreprocessedFrame& frame = *slot.frame;
    const FrameResult result = session.process(frame);
    ++summary.frames_integrated;
    const StageTimes& s = frame.times;
    char row[512];
    std::snprintf(row, sizeof(row),
                  ",%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f\n", s.load,
                  s.normals, s.segmentation, s.refinement, s.association,
                  s.integration, s.counts, s.total());
    timing << frame.id << row;
    log << frame_log_line(frame, result) << '\n';
    VLOG(1) << "frame " << frame.id << ": " << frame.segments.size()
            << " segments, " << result.instances.size() << " instances, "
            << s.total() << " ms";
    if (progress) progress(result, position + 1, selected.size());
  };

  if (config.realtime) {
    // Frame k arrives k / hz seconds after the start; after each frame the
    // newest arrived frame is taken and older waiting ones are dropped.
    size_t position = 0;
    while (position < selected.size()) {
      consume(preprocess_slot(dataset, selected[position], config), position);
      const double elapsed =
          std::chrono::duration<double>(Clock::now() - start).count();
      const size_t arrived =
          static_cast<size_t>(std::floor(elapsed * config.realtime_hz));
      const size_t next = std::max(position + 1, arrived);
      summary.frames_dropped += next - position - 1;
      position = next;
    }
  } else if (config.preprocess_threads == 0) {
    for (size_t position = 0; position < selected.size(); ++position) {
      consume(preprocess_slot(dataset, selected[position], config), position);
    }
  } else {
    PreprocessQueue queue(dataset, config, selected);
    for (size_t position = 0; position < selected.size(); ++position) {
      consume(queue.take(position), position);
    }
  }
  if (!timing || !log) throw Error("failed writing run logs");

  const SegmentMap& map = session.map();
  save_map(out_dir / "map.objmap", map);
  const auto segments = map.extract_segments();
  std::set<InstanceLabel> instances;
  for (const auto& s : segments) {
    if (s.instance != 0) instances.insert(s.instance);
  }
  summary.segments = segments.size();
  summary.instances = instances.size();
  summary.wall_seconds =
      std::chrono::duration<double>(Clock::now() - start).count();

  nlohmann::ordered_json j;
  j["dataset"] = dataset.root().string();
  j["frames_total"] = summary.frames_total;
  j["frames_selected"] = summary.frames_selected;
  j["frames_integrated"] = summary.frames_integrated;
  j["frames_dropped"] = summary.frames_dropped;
  j["frames_skipped"] = summary.frames_skipped;
  j["segments"] = summary.segments;
  j["instances"] = summary.instances;
  j["blocks"] = map.grid().block_count();
  j["wall_seconds"] = summary.wall_seconds;
  j["config"] = {
      {"voxel_size", config.map.voxel_size},
      {"truncation_multiplier", config.map.truncation_multiplier},
      {"min_instance_overlap", config.min_instance_overlap},
      {"min_segment_overlap", config.min_segment_overlap},
      {"concavity_angle_deg", config.segmentation.concavity_angle_deg},
      {"min_distance", config.segmentation.min_distance},
      {"distance_factor", config.segmentation.distance_factor},
      {"min_region_size", config.segmentation.min_region_size},
      {"frame_stride", config.frame_stride},
      {"point_stride", config.point_stride},
      {"use_masks", config.use_masks},
      {"carve_free_space", config.integrator.carve_free_space},
      {"max_range", config.integrator.max_range},
  };
  open_output(out_dir / "summary.json") << j.dump(2) << '\n';
  return summary;
}

ExportSummary export_map(const SegmentMap& map,
                         const std::filesystem::path& out_dir,
                         const ExportOptions& options) {
  ExportSummary summary;
  std::filesystem::create_directories(out_dir);
  if (options.mesh) {
    const TriangleMesh mesh = extract_mesh(map);
    write_ply(out_dir / "mesh.ply", mesh);
    summary.triangles = mesh.triangles.size();
    const auto dir = out_dir / "instances";
    std::filesystem::create_directories(dir);
    for (const auto& [id, part] : extract_instance_meshes(map, mesh)) {
      write_ply(dir / ("instance_" + std::to_string(id) + ".ply"), part);
      ++summary.instance_meshes;
    }
  }
  if (options.segments) {
    std::ofstream out = open_output(out_dir / "segments.csv");
    out << "label,instance,class_id,voxels\n";
    for (const GlobalSegment& s : map.extract_segments()) {
      out << s.label << ',' << s.instance << ',' << s.class_id << ','
          << s.voxels.size() << '\n';
      ++summary.segments;
    }
  }
  if (options.counts) {
    std::ofstream phi = open_output(out_dir / "phi.csv");
    phi << "label,instance,count\n";
    for (const auto& [label, row] : map.counts().instance_counts) {
      for (const auto& [instance, n] : row) {
        phi << label << ',' << instance << ',' << n << '\n';
      }
    }
    std::ofstream psi = open_output(out_dir / "psi.csv");
    psi << "label,class_id,count\n";
    for (const auto& [label, row] : map.counts().class_counts) {
      for (const auto& [class_id, n] : row) {
        psi << label << ',' << class_id << ',' << n << '\n';
      }
    }
  }
  return summary;
}

}  // namespace objmap
