#include "objmap/dataset.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "objmap/png_io.h"

namespace objmap {
namespace {

// Next non-blank, non-comment line.
bool next_record(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

bool parse_number(const std::string& s, double& out) {
  std::istringstream in(s);
  in >> out;
  return in && in.peek() == std::char_traits<char>::eof();
}

}  // namespace

CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!next_record(in, line)) {
    throw ParseError(path.string() + " holds no intrinsics record");
  }
  std::istringstream fields(line);
  CameraIntrinsics intr;
  if (!(fields >> intr.fx >> intr.fy >> intr.cx >> intr.cy >> intr.width >>
        intr.height)) {
    throw ParseError(path.string() +
                     ": expected 'fx fy cx cy width height'");
  }
  try {
    intr.validate();
  } catch (const Error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return intr;
}

void write_intrinsics(const std::filesystem::path& path,
                      const CameraIntrinsics& intr) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer), "%.17g %.17g %.17g %.17g %d %d\n",
                intr.fx, intr.fy, intr.cx, intr.cy, intr.width, intr.height);
  out << "# fx fy cx cy width height\n" << buffer;
}

std::map<std::string, RigidPose> read_poses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::map<std::string, RigidPose> poses;
  std::string line;
  int line_no = 0;
  while (next_record(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string frame;
    Eigen::Vector3d t;
    double qw, qx, qy, qz;
    if (!(fields >> frame >> t.x() >> t.y() >> t.z() >> qw >> qx >> qy >>
          qz)) {
      throw ParseError(path.string() + ": malformed pose record " +
                       std::to_string(line_no));
    }
    try {
      poses[frame] = RigidPose(Eigen::Quaterniond(qw, qx, qy, qz), t);
    } catch (const Error& e) {
      throw ParseError(path.string() + ": frame " + frame + ": " + e.what());
    }
  }
  return poses;
}

void write_poses(const std::filesystem::path& path,
                 const std::vector<std::pair<std::string, RigidPose>>& poses) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "# frame tx ty tz qw qx qy qz\n";
  char buffer[512];
  for (const auto& [frame, pose] : poses) {
    const auto& q = pose.rotation();
    const auto& t = pose.translation();
    std::snprintf(buffer, sizeof(buffer),
                  " %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", t.x(), t.y(),
                  t.z(), q.w(), q.x(), q.y(), q.z());
    out << frame << buffer;
  }
}

void sort_frame_ids(std::vector<std::string>& ids) {
  std::vector<double> keys(ids.size());
  bool numeric = true;
  for (size_t i = 0; i < ids.size() && numeric; ++i) {
    numeric = parse_number(ids[i], keys[i]);
  }
  if (!numeric) {
    std::sort(ids.begin(), ids.end());
    return;
  }
  std::vector<size_t> order(ids.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    return ids[a] < ids[b];
  });
  std::vector<std::string> sorted;
  sorted.reserve(ids.size());
  for (size_t i : order) sorted.push_back(std::move(ids[i]));
  ids = std::move(sorted);
}

Dataset Dataset::open(const std::filesystem::path& root) {
  Dataset d;
  d.root_ = root;
  if (!std::filesystem::is_directory(root)) {
    throw ParseError("dataset directory " + root.string() + " does not exist");
  }
  d.intrinsics_ = read_intrinsics(root / "intrinsics.txt");
  d.poses_ = read_poses(root / "poses.txt");

  const auto depth_dir = root / "depth";
  if (!std::filesystem::is_directory(depth_dir)) {
    throw ParseError(depth_dir.string() + " does not exist");
  }
  for (const auto& entry : std::filesystem::directory_iterator(depth_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      d.frames_.push_back(entry.path().stem().string());
    }
  }
  sort_frame_ids(d.frames_);
  for (const auto& frame : d.frames_) {
    if (!d.poses_.contains(frame)) {
      throw Error("depth frame " + frame + " has no pose in poses.txt");
    }
  }
  return d;
}

const RigidPose& Dataset::pose(const std::string& frame) const {
  auto it = poses_.find(frame);
  if (it == poses_.end()) throw Error("no pose for frame " + frame);
  return it->second;
}

std::filesystem::path Dataset::depth_path(const std::string& frame) const {
  return root_ / "depth" / (frame + ".png");
}

Image<float> Dataset::load_depth(const std::string& frame) const {
  Image<std::uint16_t> mm = read_png16(depth_path(frame));
  if (!mm.same_shape(intrinsics_.width, intrinsics_.height)) {
    throw DimensionError("depth frame " + frame + " is " +
                         std::to_string(mm.width()) + "x" +
                         std::to_string(mm.height()) +
                         ", intrinsics say " +
                         std::to_string(intrinsics_.width) + "x" +
                         std::to_string(intrinsics_.height));
  }
  return depth_from_millimeters(mm);
}

}  // namespace objmap
