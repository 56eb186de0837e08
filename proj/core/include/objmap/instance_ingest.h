#ifndef OBJMAP_INSTANCE_INGEST_H_
#define OBJMAP_INSTANCE_INGEST_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "objmap/depth_segmentation.h"
#include "objmap/geometry.h"

namespace objmap {

struct InstanceInfo {
  ClassId class_id = 0;
  std::string class_name;
  // Detector confidence in [0, 1]. Not used by the refinement step.
  double score = 0.0;

  friend bool operator==(const InstanceInfo&, const InstanceInfo&) = default;
};

// Instance predictions of one frame: an id raster (0 = no instance) and the
// table of the ids it contains. Mask k is {p : ids(p) == k}.
struct MaskFrame {
  Image<std::uint16_t> ids;
  std::map<InstanceId, InstanceInfo> instances;

  size_t instance_count() const { return instances.size(); }
  // Throws ParseError when the raster holds an id missing from the table.
  void validate() const;
};

// One binary instance mask as produced by a detector.
struct BinaryMask {
  Image<std::uint8_t> mask;
  InstanceInfo info;
};

// Fuses per-instance binary masks into an id raster. Instances are numbered
// 1..n in input order; a pixel claimed by several masks goes to the one with
// the higher score (earlier mask on equal scores).
MaskFrame fuse_binary_masks(std::span<const BinaryMask> masks, int width,
                            int height);

// Paths of the raster and sidecar table for a frame inside `directory`:
// `<frame>.masks.png` and `<frame>.masks.json`.
std::filesystem::path mask_raster_path(const std::filesystem::path& directory,
                                       const std::string& frame);
std::filesystem::path mask_table_path(const std::filesystem::path& directory,
                                      const std::string& frame);

// Loads the masks of `frame`. When the raster file does not exist the result
// is an all-zero raster of the given size with no instances. Throws
// ParseError for malformed files and DimensionError when the raster size
// differs from width x height.
MaskFrame load_masks(const std::filesystem::path& directory,
                     const std::string& frame, int width, int height);

void save_masks(const std::filesystem::path& directory,
                const std::string& frame, const MaskFrame& masks);

// Parses the JSON sidecar: an array of {id, class_id, class_name, score}.
std::map<InstanceId, InstanceInfo> parse_mask_table(const std::string& text);
std::string format_mask_table(const std::map<InstanceId, InstanceInfo>& table);

struct MaskOverlap {
  InstanceId mask = 0;
  std::uint32_t pixels = 0;  // |r_i ∩ M_k|
  double fraction = 0.0;     // |r_i ∩ M_k| / |r_i|
};

// Sparse overlap table. Row i belongs to regions[i] and lists masks with a
// nonzero intersection in ascending mask id order.
struct OverlapTable {
  std::vector<std::vector<MaskOverlap>> rows;
};

OverlapTable compute_overlaps(std::span<const Region2D> regions,
                              const MaskFrame& masks);

inline constexpr double kDefaultMinInstanceOverlap = 0.5;

// Assigns each segment the mask with the largest overlap when that overlap
// exceeds `min_overlap` (lowest mask id on ties); everything else gets
// instance 0 and class 0. `overlaps.rows[i]` must describe `segments[i]`.
// Returns the sorted set of frame instances in use.
std::vector<InstanceId> refine_segments(std::span<FrameSegment> segments,
                                        const OverlapTable& overlaps,
                                        const MaskFrame& masks,
                                        double min_overlap);

}  // namespace objmap

#endif  // OBJMAP_INSTANCE_INGEST_H_
