#ifndef OBJMAP_DATASET_H_
#define OBJMAP_DATASET_H_

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "objmap/geometry.h"

namespace objmap {

// On-disk sequence layout:
//   intrinsics.txt          fx fy cx cy width height
//   poses.txt               frame tx ty tz qw qx qy qz   (camera-to-world)
//   depth/<frame>.png       16-bit depth in millimeters
//   masks/<frame>.masks.png + .masks.json   (optional)
// Blank lines and lines starting with '#' are ignored in the text files.

CameraIntrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const std::filesystem::path& path,
                      const CameraIntrinsics& intr);

std::map<std::string, RigidPose> read_poses(const std::filesystem::path& path);
void write_poses(const std::filesystem::path& path,
                 const std::vector<std::pair<std::string, RigidPose>>& poses);

// Timestamp order: numeric when every id parses as a number, otherwise
// lexicographic.
void sort_frame_ids(std::vector<std::string>& ids);

class Dataset {
 public:
  // Reads intrinsics and poses and lists depth frames. Throws ParseError for
  // malformed files and Error when a depth frame has no pose.
  static Dataset open(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  const CameraIntrinsics& intrinsics() const { return intrinsics_; }
  // Frame ids in timestamp order.
  const std::vector<std::string>& frames() const { return frames_; }
  const RigidPose& pose(const std::string& frame) const;

  std::filesystem::path depth_path(const std::string& frame) const;
  std::filesystem::path masks_dir() const { return root_ / "masks"; }

  // Depth in meters. Throws on unreadable files or a size mismatch with the
  // intrinsics.
  Image<float> load_depth(const std::string& frame) const;

 private:
  std::filesystem::path root_;
  CameraIntrinsics intrinsics_;
  std::vector<std::string> frames_;
  std::map<std::string, RigidPose> poses_;
};

}  // namespace objmap

#endif  // OBJMAP_DATASET_H_
