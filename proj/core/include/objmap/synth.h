#ifndef OBJMAP_SYNTH_H_
#define OBJMAP_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "objmap/depth_segmentation.h"
#include "objmap/geometry.h"
#include "objmap/instance_ingest.h"
#include "objmap/volumetric_map.h"

namespace objmap {

// Analytic scene primitives, each defined in its own local frame:
//   kPlane   rectangle in the local z = 0 plane, |x| <= size.x/2,
//            |y| <= size.y/2; the normal is local +z
//   kBox     axis-aligned box with full extents `size`, centered
//   kSphere  sphere of `radius` around the origin
//   kLPrism  L-shaped prism: the union of two boxes inside the footprint
//            [-size.x/2, size.x/2] x [-size.y/2, size.y/2], height size.z,
//            arms `thickness` thick along the -y and -x sides
enum class PrimitiveType { kPlane, kBox, kSphere, kLPrism };

struct Primitive {
  PrimitiveType type = PrimitiveType::kBox;
  RigidPose pose;  // local-to-world
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  double radius = 0.5;
  double thickness = 0.1;
  // 0 marks background structure that has no ground-truth instance.
  InstanceId instance = 0;
  ClassId class_id = 0;
  std::string class_name;

  // Signed distance of a world point; exact outside and on the surface.
  double sdf(const Eigen::Vector3d& p) const;
  // Smallest t > 0 with origin + t * dir on the surface.
  std::optional<double> intersect(const Eigen::Vector3d& origin,
                                  const Eigen::Vector3d& dir) const;
  // World-space bounding box corners (min, max).
  std::pair<Eigen::Vector3d, Eigen::Vector3d> bounds() const;
};

struct NoiseModel {
  // σ = coefficient * z^2 in meters. 0 disables noise.
  double coefficient = 0.0;
  std::uint64_t seed = 1;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  std::vector<RigidPose> trajectory;
  CameraIntrinsics intrinsics;
  NoiseModel noise;

  // Throws Error on duplicate nonzero instance ids, instances without a
  // class, bad dimensions, an empty trajectory or bad intrinsics.
  void validate() const;
};

// Parses the JSON scene description documented in docs/scene_format.md.
SceneSpec parse_scene(const std::string& json_text);
SceneSpec load_scene(const std::filesystem::path& path);

struct RenderedFrame {
  Image<float> depth;  // meters, 0 where nothing is hit
  Image<std::uint16_t> instance_ids;  // scene instance id of the hit surface
  Image<std::uint16_t> primitive_ids;  // 1 + primitive index, 0 for no hit
};

// Ray casts every pixel center; the nearest hit wins. With noise enabled the
// frame index seeds the generator together with the scene seed.
RenderedFrame render_depth(const SceneSpec& scene, const RigidPose& pose,
                           std::uint64_t frame_index = 0);

// Ground-truth instance masks of a rendered frame: frame-local ids 1..K by
// descending pixel count (ties by scene instance id), score 1.
MaskFrame ground_truth_masks(const SceneSpec& scene,
                             const RenderedFrame& frame);

struct GroundTruthInstance {
  InstanceId id = 0;
  ClassId class_id = 0;
  std::string class_name;
  std::vector<VoxelIndex> voxels;  // IndexLess order
};

struct GroundTruthVolume {
  double voxel_size = 0.01;
  std::vector<GroundTruthInstance> instances;  // ascending id
};

// Voxels whose center lies within `band` of some surface, labeled with the
// instance of the nearest primitive. Voxels nearest to background
// primitives are left out.
GroundTruthVolume ground_truth_volume(const SceneSpec& scene,
                                      double voxel_size, double band);

void save_ground_truth(const std::filesystem::path& path,
                       const GroundTruthVolume& gt);
GroundTruthVolume load_ground_truth(const std::filesystem::path& path);

struct SynthDatasetOptions {
  bool write_masks = true;
  bool write_ground_truth = true;
  double gt_voxel_size = 0.01;
  double gt_band = 0.04;
};

// Renders the whole trajectory into the standard dataset layout, with frame
// ids 000000, 000001, ... and the ground-truth volume as gt_volume.txt.
void write_synthetic_dataset(const SceneSpec& scene,
                             const std::filesystem::path& root,
                             const SynthDatasetOptions& options = {});

}  // namespace objmap

#endif  // OBJMAP_SYNTH_H_
