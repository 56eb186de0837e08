#include "objmap/volumetric_map.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "objmap/geometry.h"

namespace objmap {

std::array<std::uint8_t, 3> label_color(std::uint32_t label) {
  if (label == 0) {
    return {200, 200, 200};
  }
  // splitmix64 finalizer.
  std::uint64_t x = label + 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  x ^= x >> 31;
  // Keep colors away from black and from the unlabeled gray.
  return {static_cast<std::uint8_t>(40 + (x & 0xff) % 216),
          static_cast<std::uint8_t>(40 + ((x >> 8) & 0xff) % 216),
          static_cast<std::uint8_t>(40 + ((x >> 16) & 0xff) % 216)};
}

VoxelGrid::VoxelGrid(double voxel_size) : voxel_size_(voxel_size) {
  if (!(voxel_size > 0.0)) {
    throw Error("voxel size must be positive");
  }
}

VoxelIndex VoxelGrid::voxel_index(const Eigen::Vector3d& point) const {
  return {static_cast<int>(std::floor(point.x() / voxel_size_)),
          static_cast<int>(std::floor(point.y() / voxel_size_)),
          static_cast<int>(std::floor(point.z() / voxel_size_))};
}

Eigen::Vector3d VoxelGrid::voxel_center(const VoxelIndex& voxel) const {
  return (voxel.cast<double>() + Eigen::Vector3d::Constant(0.5)) * voxel_size_;
}

const VoxelBlock* VoxelGrid::find_block(const BlockIndex& block) const {
  const auto it = blocks_.find(block);
  return it == blocks_.end() ? nullptr : it->second.get();
}

VoxelBlock* VoxelGrid::find_block(const BlockIndex& block) {
  const auto it = blocks_.find(block);
  return it == blocks_.end() ? nullptr : it->second.get();
}

VoxelBlock& VoxelGrid::allocate_block(const BlockIndex& block) {
  auto& slot = blocks_[block];
  if (!slot) {
    slot = std::make_unique<VoxelBlock>();
  }
  return *slot;
}

const TsdfVoxel* VoxelGrid::find_voxel(const VoxelIndex& voxel) const {
  const BlockIndex block = block_of(voxel);
  const VoxelBlock* ptr = find_block(block);
  if (ptr == nullptr) {
    return nullptr;
  }
  const VoxelIndex local = voxel - block * kBlockSide;
  return &ptr->at(local.x(), local.y(), local.z());
}

std::vector<BlockIndex> VoxelGrid::sorted_block_indices() const {
  std::vector<BlockIndex> indices;
  indices.reserve(blocks_.size());
  for (const auto& entry : blocks_) {
    indices.push_back(entry.first);
  }
  std::sort(indices.begin(), indices.end(), IndexLess());
  return indices;
}

void MapConfig::validate() const {
  if (!(voxel_size > 0.0)) {
    throw Error("voxel size must be positive");
  }
  if (!(truncation_multiplier > 0.0)) {
    throw Error("truncation multiplier must be positive");
  }
  if (!(max_weight >= 1.0f)) {
    throw Error("maximum fusion weight must be at least 1");
  }
}

namespace {

template <typename Key>
Key row_argmax(const std::map<Label, std::map<Key, std::uint32_t>>& table,
               Label label) {
  const auto row = table.find(label);
  if (row == table.end()) {
    return 0;
  }
  Key best = 0;
  std::uint32_t best_count = 0;
  // Ascending key order with strict > keeps the smallest key on ties.
  for (const auto& [key, count] : row->second) {
    if (count > best_count) {
      best = key;
      best_count = count;
    }
  }
  return best;
}

template <typename Key>
std::uint32_t cell(const std::map<Label, std::map<Key, std::uint32_t>>& table,
                   Label label, Key key) {
  const auto row = table.find(label);
  if (row == table.end()) {
    return 0;
  }
  const auto it = row->second.find(key);
  return it == row->second.end() ? 0 : it->second;
}

}  // namespace

std::uint32_t CountTables::instance_count(Label label,
                                          InstanceLabel instance) const {
  return cell(instance_counts, label, instance);
}

std::uint32_t CountTables::class_count(Label label, ClassId class_id) const {
  return cell(class_counts, label, class_id);
}

InstanceLabel CountTables::dominant_instance(Label label) const {
  return row_argmax(instance_counts, label);
}

ClassId CountTables::dominant_class(Label label) const {
  return row_argmax(class_counts, label);
}

SegmentMap::SegmentMap(const MapConfig& config)
    : config_(config), grid_(config.voxel_size) {
  config_.validate();
}

std::optional<Label> SegmentMap::lookup_voxel_label(
    const Eigen::Vector3d& point_world) const {
  const TsdfVoxel* voxel = grid_.find_voxel(point_world);
  if (voxel == nullptr || voxel->label == 0) {
    return std::nullopt;
  }
  return voxel->label;
}

void SegmentMap::update_counts(std::span<const FrameSegment> segments,
                               std::span<const Label> segment_labels,
                               const InstanceMapping& instance_mapping) {
  if (segments.size() != segment_labels.size()) {
    throw DimensionError("segment label list does not match the segments");
  }
  for (size_t i = 0; i < segments.size(); ++i) {
    const FrameSegment& segment = segments[i];
    if (segment.instance == 0) {
      continue;
    }
    const auto mapped = instance_mapping.find(segment.instance);
    if (mapped == instance_mapping.end()) {
      throw Error("frame instance " + std::to_string(segment.instance) +
                  " has no persistent instance mapping");
    }
    ++counts_.instance_counts[segment_labels[i]][mapped->second];
    ++counts_.class_counts[segment_labels[i]][segment.class_id];
  }
}

std::vector<GlobalSegment> SegmentMap::extract_segments() const {
  std::map<Label, std::vector<VoxelIndex>> by_label;
  grid_.for_each_block([&](const BlockIndex& block, const VoxelBlock& data) {
    const VoxelIndex origin = block * kBlockSide;
    for (int z = 0; z < kBlockSide; ++z) {
      for (int y = 0; y < kBlockSide; ++y) {
        for (int x = 0; x < kBlockSide; ++x) {
          const TsdfVoxel& voxel = data.at(x, y, z);
          if (voxel.observed() && voxel.label != 0) {
            by_label[voxel.label].push_back(origin + VoxelIndex(x, y, z));
          }
        }
      }
    }
  });
  std::vector<GlobalSegment> segments;
  segments.reserve(by_label.size());
  for (auto& [label, voxels] : by_label) {
    std::sort(voxels.begin(), voxels.end(), IndexLess());
    GlobalSegment segment;
    segment.label = label;
    segment.voxels = std::move(voxels);
    segment.instance = counts_.dominant_instance(label);
    // A class is only reported for segments that carry an instance.
    segment.class_id =
        segment.instance != 0 ? counts_.dominant_class(label) : 0;
    segments.push_back(std::move(segment));
  }
  return segments;
}

}  // namespace objmap
