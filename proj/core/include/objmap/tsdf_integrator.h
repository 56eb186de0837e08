#ifndef OBJMAP_TSDF_INTEGRATOR_H_
#define OBJMAP_TSDF_INTEGRATOR_H_

#include <span>

#include "objmap/depth_segmentation.h"
#include "objmap/geometry.h"
#include "objmap/volumetric_map.h"

namespace objmap {

struct IntegratorConfig {
  double max_range = kDefaultMaxRange;
  // Allocate blocks along the whole ray so observed empty space is stored.
  bool carve_free_space = true;
  // Only every n-th pixel (in u and v) casts a free-space allocation ray.
  int carve_pixel_stride = 4;

  void validate() const;
};

struct IntegrationStats {
  size_t blocks_touched = 0;
  size_t voxels_updated = 0;
  size_t voxels_labeled = 0;
};

// Persistent label per pixel, 0 where no segment covers the pixel.
Image<Label> make_label_image(std::span<const FrameSegment> segments,
                              std::span<const Label> segment_labels, int width,
                              int height);

// Projective TSDF fusion of one depth frame (meters, 0 = invalid) taken from a
// camera-to-world `pose`. Each voxel of the touched blocks is projected to its
// nearest pixel; with d the pixel depth and z the voxel depth, the sample
// min(d - z, truncation) is averaged into the voxel with unit weight unless
// d - z < -truncation. Voxels inside the truncation band vote for the
// pixel's label.
IntegrationStats integrate_frame(SegmentMap& map, const Image<float>& depth,
                                 const RigidPose& pose,
                                 const CameraIntrinsics& intr,
                                 const Image<Label>& pixel_labels,
                                 const IntegratorConfig& config);

IntegrationStats integrate_frame(SegmentMap& map, const Image<float>& depth,
                                 const RigidPose& pose,
                                 const CameraIntrinsics& intr,
                                 std::span<const FrameSegment> segments,
                                 std::span<const Label> segment_labels,
                                 const IntegratorConfig& config);

// Majority-vote update of a voxel label: agreement increments the counter,
// disagreement decrements it and the incoming label takes over at zero.
void vote_label(TsdfVoxel& voxel, Label incoming);

}  // namespace objmap

#endif  // OBJMAP_TSDF_INTEGRATOR_H_
