#ifndef OBJMAP_DEPTH_SEGMENTATION_H_
#define OBJMAP_DEPTH_SEGMENTATION_H_

#include <cstdint>
#include <vector>

#include "objmap/geometry.h"

namespace objmap {

// Frame-local region id; 0 means "no region".
using RegionId = std::uint32_t;
// Frame-local instance id (mask index) or category id; 0 means none.
using InstanceId = std::uint32_t;
using ClassId = std::uint32_t;

// Unit surface normals in the camera frame, oriented toward the camera.
struct NormalMap {
  Image<Eigen::Vector3f> normals;
  Image<std::uint8_t> valid;

  int width() const { return normals.width(); }
  int height() const { return normals.height(); }
  bool is_valid(int u, int v) const { return valid(u, v) != 0; }
};

struct SegmentationConfig {
  // Minimum angle between adjacent normals for a concave junction.
  double concavity_angle_deg = 10.0;
  // Depth discontinuity threshold: max(min_distance, distance_factor * z).
  double min_distance = 0.03;
  double distance_factor = 0.05;
  // Connected components smaller than this are dropped.
  int min_region_size = 100;

  void validate() const;
  double distance_threshold(double depth) const {
    const double scaled = distance_factor * depth;
    return scaled > min_distance ? scaled : min_distance;
  }
};

// A closed 2D region of one frame. `pixels` holds linear pixel indices in
// ascending (row-major) order.
struct Region2D {
  RegionId id = 0;
  std::vector<std::uint32_t> pixels;

  size_t pixel_count() const { return pixels.size(); }
};

// The 3D segment of a region, plus the instance label the refinement step
// assigns to it. Points are camera-frame vertices of every `stride`-th pixel
// of the region.
struct FrameSegment {
  Region2D region;
  std::vector<Eigen::Vector3f> points;
  int stride = 1;
  InstanceId instance = 0;
  ClassId class_id = 0;

  size_t pixel_count() const { return region.pixel_count(); }
};

struct FrameSegmentation {
  // Region id per pixel; 0 for invalid or discarded pixels.
  Image<RegionId> region_map;
  std::vector<Region2D> regions;
  std::vector<FrameSegment> segments;
};

enum class EdgeLabel { kConnected, kBoundary };

// Central-difference normals. A pixel's normal is invalid when it sits on the
// image border or any of its four neighbors is invalid.
NormalMap estimate_normals(const VertexMap& vmap);

// Classifies the edge between 4-adjacent pixels p and q. The relation is
// symmetric in p and q.
EdgeLabel edge_classify(const VertexMap& vmap, const NormalMap& nmap, int pu,
                        int pv, int qu, int qv,
                        const SegmentationConfig& config);

// Connected components over `kConnected` edges. Surviving regions are
// numbered 1..n in row-major order of their first pixel.
FrameSegmentation segment_frame(const VertexMap& vmap, const NormalMap& nmap,
                                const SegmentationConfig& config,
                                int point_stride = 1);

}  // namespace objmap

#endif  // OBJMAP_DEPTH_SEGMENTATION_H_
