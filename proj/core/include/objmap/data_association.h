#ifndef OBJMAP_DATA_ASSOCIATION_H_
#define OBJMAP_DATA_ASSOCIATION_H_

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "objmap/depth_segmentation.h"
#include "objmap/geometry.h"
#include "objmap/labels.h"
#include "objmap/volumetric_map.h"

namespace objmap {

inline constexpr double kDefaultMinSegmentOverlap = 20.0;

struct LabelOverlap {
  Label label = 0;
  std::uint32_t points = 0;

  friend bool operator==(const LabelOverlap&, const LabelOverlap&) = default;
};

// Sparse Π. Row i belongs to segments[i] and lists map labels hit by its
// points in ascending label order.
struct SegmentOverlapTable {
  std::vector<std::vector<LabelOverlap>> rows;

  std::uint32_t at(size_t segment, Label label) const;
};

// Transforms every segment point to the world frame and counts the labels of
// the voxels they land in. Unallocated and unlabeled voxels are ignored.
SegmentOverlapTable compute_3d_overlaps(std::span<const FrameSegment> segments,
                                        const SegmentMap& map,
                                        const RigidPose& pose);

// Segment indices by descending pixel count, ties by ascending region id.
std::vector<size_t> processing_order(std::span<const FrameSegment> segments);

struct SegmentAssociation {
  // L_t, one label per frame segment.
  std::vector<Label> labels;
  // True where the label came from a map segment rather than a fresh label.
  std::vector<bool> matched;
  // Π_j of each accepted match, keyed by map label.
  std::map<Label, std::uint32_t> match_overlaps;
};

// For every map label j the maximally overlapping segment î_j takes label j
// when Π_j * stride > min_overlap, with stride the point stride of î_j. When
// several map labels pick the same segment the largest Π_j wins, then the
// smaller label. Remaining segments get fresh labels in processing order.
SegmentAssociation associate_segments(const SegmentOverlapTable& overlaps,
                                      std::span<const FrameSegment> segments,
                                      PersistentLabels& labels,
                                      double min_overlap =
                                          kDefaultMinSegmentOverlap);

// I_t. Segments with a frame instance are visited in processing order; an
// unmapped frame instance takes the unclaimed persistent instance with the
// largest positive Φ(L_t(s_i), ·), smaller label on ties. Frame instances
// left without a match get fresh labels in order of first appearance.
InstanceMapping associate_instances(std::span<const FrameSegment> segments,
                                    std::span<const Label> segment_labels,
                                    const CountTables& counts,
                                    PersistentLabels& labels);

}  // namespace objmap

#endif  // OBJMAP_DATA_ASSOCIATION_H_
