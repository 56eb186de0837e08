#ifndef OBJMAP_VOLUMETRIC_MAP_H_
#define OBJMAP_VOLUMETRIC_MAP_H_

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "objmap/depth_segmentation.h"
#include "objmap/labels.h"

namespace objmap {

// One TSDF cell. `label_confidence` is a majority-vote counter for `label`.
struct TsdfVoxel {
  float sdf = 0.0f;
  float weight = 0.0f;
  Label label = 0;
  std::uint32_t label_confidence = 0;

  bool observed() const { return weight > 0.0f; }
  friend bool operator==(const TsdfVoxel&, const TsdfVoxel&) = default;
};

using VoxelIndex = Eigen::Vector3i;
using BlockIndex = Eigen::Vector3i;

struct IndexHash {
  size_t operator()(const Eigen::Vector3i& index) const {
    // Large primes from Teschner et al., the usual voxel hashing choice.
    return static_cast<size_t>(index.x()) * 73856093u ^
           static_cast<size_t>(index.y()) * 19349669u ^
           static_cast<size_t>(index.z()) * 83492791u;
  }
};

// Lexicographic (x, y, z) order, used wherever output must be deterministic.
struct IndexLess {
  bool operator()(const Eigen::Vector3i& a, const Eigen::Vector3i& b) const {
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    return a.z() < b.z();
  }
};

inline constexpr int kBlockSide = 16;
inline constexpr int kVoxelsPerBlock = kBlockSide * kBlockSide * kBlockSide;

struct VoxelBlock {
  std::array<TsdfVoxel, kVoxelsPerBlock> voxels{};

  static int linear_index(int x, int y, int z) {
    return x + kBlockSide * (y + kBlockSide * z);
  }
  TsdfVoxel& at(int x, int y, int z) { return voxels[linear_index(x, y, z)]; }
  const TsdfVoxel& at(int x, int y, int z) const {
    return voxels[linear_index(x, y, z)];
  }
};

inline int floor_div(int a, int b) {
  const int q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

inline BlockIndex block_of(const VoxelIndex& voxel) {
  return {floor_div(voxel.x(), kBlockSide), floor_div(voxel.y(), kBlockSide),
          floor_div(voxel.z(), kBlockSide)};
}

// Sparse grid of voxel blocks keyed by integer block coordinates. Voxel
// (i, j, k) covers [i, i+1) x [j, j+1) x [k, k+1) times the voxel size.
class VoxelGrid {
 public:
  explicit VoxelGrid(double voxel_size);

  double voxel_size() const { return voxel_size_; }

  VoxelIndex voxel_index(const Eigen::Vector3d& point) const;
  Eigen::Vector3d voxel_center(const VoxelIndex& voxel) const;

  const VoxelBlock* find_block(const BlockIndex& block) const;
  VoxelBlock* find_block(const BlockIndex& block);
  VoxelBlock& allocate_block(const BlockIndex& block);

  const TsdfVoxel* find_voxel(const VoxelIndex& voxel) const;
  const TsdfVoxel* find_voxel(const Eigen::Vector3d& point) const {
    return find_voxel(voxel_index(point));
  }

  size_t block_count() const { return blocks_.size(); }
  std::vector<BlockIndex> sorted_block_indices() const;

  template <typename Fn>
  void for_each_block(Fn&& fn) const {
    for (const auto& [index, block] : blocks_) {
      fn(index, *block);
    }
  }

 private:
  double voxel_size_;
  std::unordered_map<BlockIndex, std::unique_ptr<VoxelBlock>, IndexHash>
      blocks_;
};

struct MapConfig {
  double voxel_size = 0.01;
  double truncation_multiplier = 4.0;
  float max_weight = 10000.0f;

  double truncation_distance() const {
    return truncation_multiplier * voxel_size;
  }
  void validate() const;
};

// Pairwise co-observation counts: Φ(l, o) over segment and instance labels
// and Ψ(l, c) over segment labels and classes.
struct CountTables {
  std::map<Label, std::map<InstanceLabel, std::uint32_t>> instance_counts;
  std::map<Label, std::map<ClassId, std::uint32_t>> class_counts;

  std::uint32_t instance_count(Label label, InstanceLabel instance) const;
  std::uint32_t class_count(Label label, ClassId class_id) const;

  // Argmax over the row, smallest key on ties; 0 for an absent row.
  InstanceLabel dominant_instance(Label label) const;
  ClassId dominant_class(Label label) const;

  bool empty() const {
    return instance_counts.empty() && class_counts.empty();
  }
  friend bool operator==(const CountTables&, const CountTables&) = default;
};

// A map-side segment: every observed voxel carrying `label`.
struct GlobalSegment {
  Label label = 0;
  std::vector<VoxelIndex> voxels;  // in IndexLess order
  InstanceLabel instance = 0;
  ClassId class_id = 0;
};

// Frame instance → persistent instance mapping, I_t.
using InstanceMapping = std::map<InstanceId, InstanceLabel>;

// The global volume: TSDF grid with per-voxel segment labels, plus the count
// tables and label counters of the session.
class SegmentMap {
 public:
  explicit SegmentMap(const MapConfig& config = MapConfig());

  const MapConfig& config() const { return config_; }
  const VoxelGrid& grid() const { return grid_; }
  VoxelGrid& grid() { return grid_; }
  const CountTables& counts() const { return counts_; }
  CountTables& counts() { return counts_; }
  const PersistentLabels& labels() const { return labels_; }
  PersistentLabels& labels() { return labels_; }

  // Label of the voxel containing `point_world`; nullopt when the voxel is
  // unallocated or unlabeled.
  std::optional<Label> lookup_voxel_label(
      const Eigen::Vector3d& point_world) const;

  // One Φ and one Ψ increment per segment with a frame instance.
  // `segment_labels[i]` is L_t of `segments[i]`.
  void update_counts(std::span<const FrameSegment> segments,
                     std::span<const Label> segment_labels,
                     const InstanceMapping& instance_mapping);

  // Observed labeled voxels grouped by label, in ascending label order.
  std::vector<GlobalSegment> extract_segments() const;

 private:
  MapConfig config_;
  VoxelGrid grid_;
  CountTables counts_;
  PersistentLabels labels_;
};

}  // namespace objmap

#endif  // OBJMAP_VOLUMETRIC_MAP_H_
