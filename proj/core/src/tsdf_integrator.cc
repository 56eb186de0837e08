#include "objmap/tsdf_integrator.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <vector>

namespace objmap {

void IntegratorConfig::validate() const {
  if (!(max_range > 0.0)) {
    throw Error("maximum range must be positive");
  }
  if (carve_pixel_stride < 1) {
    throw Error("carving pixel stride must be at least 1");
  }
}

Image<Label> make_label_image(std::span<const FrameSegment> segments,
                              std::span<const Label> segment_labels, int width,
                              int height) {
  if (segments.size() != segment_labels.size()) {
    throw DimensionError("segment label list does not match the segments");
  }
  Image<Label> labels(width, height, 0);
  for (size_t i = 0; i < segments.size(); ++i) {
    for (const std::uint32_t pixel : segments[i].region.pixels) {
      if (pixel >= labels.size()) {
        throw DimensionError("segment pixel lies outside the frame");
      }
      labels[pixel] = segment_labels[i];
    }
  }
  return labels;
}

void vote_label(TsdfVoxel& voxel, Label incoming) {
  if (incoming == 0) {
    return;
  }
  if (voxel.label == incoming) {
    ++voxel.label_confidence;
  } else if (voxel.label_confidence <= 1) {
    voxel.label = incoming;
    voxel.label_confidence = 1;
  } else {
    --voxel.label_confidence;
  }
}

namespace {

class BlockCollector {
 public:
  BlockCollector(const VoxelGrid& grid, const RigidPose& pose)
      : grid_(grid), pose_(pose) {}

  void add_camera_point(const Eigen::Vector3d& point_camera) {
    const BlockIndex block = block_of(grid_.voxel_index(pose_ * point_camera));
    if (has_last_ && block == last_) {
      return;
    }
    last_ = block;
    has_last_ = true;
    blocks_.insert(block);
  }

  std::vector<BlockIndex> sorted() const {
    std::vector<BlockIndex> out(blocks_.begin(), blocks_.end());
    std::sort(out.begin(), out.end(), IndexLess());
    return out;
  }

 private:
  const VoxelGrid& grid_;
  const RigidPose& pose_;
  std::unordered_set<BlockIndex, IndexHash> blocks_;
  BlockIndex last_ = BlockIndex::Zero();
  bool has_last_ = false;
};

}  // namespace

IntegrationStats integrate_frame(SegmentMap& map, const Image<float>& depth,
                                 const RigidPose& pose,
                                 const CameraIntrinsics& intr,
                                 const Image<Label>& pixel_labels,
                                 const IntegratorConfig& config) {
  config.validate();
  if (!depth.same_shape(intr.width, intr.height) ||
      !pixel_labels.same_shape(depth)) {
    throw DimensionError("depth, label image and camera sizes differ");
  }
  VoxelGrid& grid = map.grid();
  const double voxel_size = grid.voxel_size();
  const double truncation = map.config().truncation_distance();
  const float max_weight = map.config().max_weight;
  const double block_length = voxel_size * kBlockSide;

  // Blocks intersecting the truncation band of every valid pixel, plus blocks
  // along a subset of rays when carving free space.
  BlockCollector collector(grid, pose);
  constexpr int kBandSamples = 4;
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      const double d = depth(u, v);
      if (!(d > 0.0) || d > config.max_range) {
        continue;
      }
      const Eigen::Vector3d ray = intr.ray(u, v);
      const double band_start = std::max(d - truncation, 0.0);
      for (int s = 0; s <= kBandSamples; ++s) {
        const double z =
            band_start + (d + truncation - band_start) * s / kBandSamples;
        collector.add_camera_point(ray * z);
      }
      if (config.carve_free_space && u % config.carve_pixel_stride == 0 &&
          v % config.carve_pixel_stride == 0) {
        const double step = 0.5 * block_length / ray.norm();
        for (double z = step; z < band_start; z += step) {
          collector.add_camera_point(ray * z);
        }
      }
    }
  }

  const std::vector<BlockIndex> blocks = collector.sorted();
  const Eigen::Matrix3d world_to_camera =
      pose.rotation().conjugate().toRotationMatrix();
  const Eigen::Vector3d camera_origin = pose.translation();
  const Eigen::Vector3d step_x = world_to_camera.col(0) * voxel_size;
  const Eigen::Vector3d step_y = world_to_camera.col(1) * voxel_size;
  const Eigen::Vector3d step_z = world_to_camera.col(2) * voxel_size;
  const float truncation_f = static_cast<float>(truncation);

  IntegrationStats stats;
  stats.blocks_touched = blocks.size();
  for (const BlockIndex& block_index : blocks) {
    VoxelBlock& block = grid.allocate_block(block_index);
    const Eigen::Vector3d first_center =
        grid.voxel_center(block_index * kBlockSide);
    const Eigen::Vector3d base = world_to_camera * (first_center - camera_origin);
    for (int z = 0; z < kBlockSide; ++z) {
      for (int y = 0; y < kBlockSide; ++y) {
        Eigen::Vector3d p = base + step_y * y + step_z * z;
        for (int x = 0; x < kBlockSide; ++x, p += step_x) {
          if (!(p.z() > 0.0)) {
            continue;
          }
          const double inv_z = 1.0 / p.z();
          const int u = static_cast<int>(
              std::floor(intr.fx * p.x() * inv_z + intr.cx + 0.5));
          const int v = static_cast<int>(
              std::floor(intr.fy * p.y() * inv_z + intr.cy + 0.5));
          if (!depth.contains(u, v)) {
            continue;
          }
          const double d = depth(u, v);
          if (!(d > 0.0) || d > config.max_range) {
            continue;
          }
          const double distance = d - p.z();
          if (distance < -truncation) {
            continue;
          }
          const float sample =
              static_cast<float>(std::min(distance, truncation));
          TsdfVoxel& voxel = block.at(x, y, z);
          const float fused =
              (voxel.weight * voxel.sdf + sample) / (voxel.weight + 1.0f);
          voxel.sdf = std::clamp(fused, -truncation_f, truncation_f);
          voxel.weight = std::min(voxel.weight + 1.0f, max_weight);
          ++stats.voxels_updated;
          if (distance < truncation) {
            const Label label = pixel_labels(u, v);
            if (label != 0) {
              vote_label(voxel, label);
              ++stats.voxels_labeled;
            }
          }
        }
      }
    }
  }
  return stats;
}

IntegrationStats integrate_frame(SegmentMap& map, const Image<float>& depth,
                                 const RigidPose& pose,
                                 const CameraIntrinsics& intr,
                                 std::span<const FrameSegment> segments,
                                 std::span<const Label> segment_labels,
                                 const IntegratorConfig& config) {
  return integrate_frame(
      map, depth, pose, intr,
      make_label_image(segments, segment_labels, depth.width(), depth.height()),
      config);
}

}  // namespace objmap
