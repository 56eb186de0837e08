#include "objmap/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "objmap/dataset.h"
#include "objmap/png_io.h"

namespace objmap {
namespace {

using Eigen::Vector3d;
using json = nlohmann::json;

constexpr double kHitEpsilon = 1e-9;
constexpr double kPi = 3.14159265358979323846;

double box_sdf(const Vector3d& q, const Vector3d& half) {
  const Vector3d d = q.cwiseAbs() - half;
  return d.cwiseMax(0.0).norm() + std::min(d.maxCoeff(), 0.0);
}

std::optional<double> box_intersect(const Vector3d& o, const Vector3d& d,
                                    const Vector3d& center,
                                    const Vector3d& half) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double lo = center[a] - half[a];
    const double hi = center[a] + half[a];
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo || o[a] > hi) return std::nullopt;
      continue;
    }
    double t1 = (lo - o[a]) / d[a];
    double t2 = (hi - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  }
  if (t_near > t_far) return std::nullopt;
  if (t_near > kHitEpsilon) return t_near;
  if (t_far > kHitEpsilon) return t_far;
  return std::nullopt;
}

// The two arms of an L prism as (center, half extents) in the local frame.
std::array<std::pair<Vector3d, Vector3d>, 2> l_prism_arms(const Primitive& p) {
  const Vector3d& s = p.size;
  const double t = p.thickness;
  return {{{Vector3d(0, -s.y() / 2 + t / 2, 0), Vector3d(s.x(), t, s.z()) / 2},
           {Vector3d(-s.x() / 2 + t / 2, 0, 0), Vector3d(t, s.y(), s.z()) / 2}}};
}

std::optional<double> nearest(std::optional<double> a,
                              std::optional<double> b) {
  if (!a) return b;
  if (!b) return a;
  return std::min(*a, *b);
}

// --- JSON helpers -----------------------------------------------------------

Vector3d vec3(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing '") + key + "'");
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 3) {
    throw ParseError(std::string("'") + key + "' must be a 3-element array");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Eigen::Quaterniond rotation_of(const json& j) {
  if (j.contains("quaternion")) {
    const json& q = j.at("quaternion");
    if (!q.is_array() || q.size() != 4) {
      throw ParseError("'quaternion' must be [w, x, y, z]");
    }
    return Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(),
                              q[2].get<double>(), q[3].get<double>());
  }
  if (j.contains("normal")) {
    return Eigen::Quaterniond::FromTwoVectors(Vector3d::UnitZ(),
                                              vec3(j, "normal").normalized());
  }
  const double yaw = j.value("yaw_deg", 0.0) * kPi / 180.0;
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vector3d::UnitZ()));
}

Primitive parse_primitive(const json& j) {
  Primitive p;
  const std::string type = j.at("type").get<std::string>();
  p.pose = RigidPose(rotation_of(j), vec3(j, "center"));
  if (type == "plane") {
    p.type = PrimitiveType::kPlane;
    const json& s = j.at("size");
    if (!s.is_array() || s.size() != 2) {
      throw ParseError("plane 'size' must be [width, depth]");
    }
    p.size = Vector3d(s[0].get<double>(), s[1].get<double>(), 0.0);
  } else if (type == "box") {
    p.type = PrimitiveType::kBox;
    p.size = vec3(j, "size");
  } else if (type == "sphere") {
    p.type = PrimitiveType::kSphere;
    p.radius = j.at("radius").get<double>();
  } else if (type == "l_prism") {
    p.type = PrimitiveType::kLPrism;
    p.size = vec3(j, "size");
    p.thickness = j.at("thickness").get<double>();
  } else {
    throw ParseError("unknown primitive type '" + type + "'");
  }
  p.instance = j.value("instance", 0u);
  p.class_id = j.value("class_id", 0u);
  p.class_name = j.value("class_name", std::string());
  if (p.class_name.empty() && p.class_id != 0) {
    p.class_name = "class_" + std::to_string(p.class_id);
  }
  return p;
}

RigidPose parse_pose(const json& j) {
  if (j.contains("eye")) return look_at(vec3(j, "eye"), vec3(j, "target"));
  return RigidPose(rotation_of(j), vec3(j, "translation"));
}

std::vector<RigidPose> parse_trajectory(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  std::vector<RigidPose> poses;
  if (type == "poses") {
    for (const json& p : j.at("poses")) poses.push_back(parse_pose(p));
  } else if (type == "static") {
    const RigidPose pose = parse_pose(j);
    poses.assign(j.at("frames").get<size_t>(), pose);
  } else if (type == "orbit") {
    const Vector3d target = vec3(j, "target");
    const double radius = j.at("radius").get<double>();
    const double height = j.at("height").get<double>();
    const size_t frames = j.at("frames").get<size_t>();
    const double start = j.value("start_deg", 0.0) * kPi / 180.0;
    const double sweep = j.value("sweep_deg", 360.0) * kPi / 180.0;
    for (size_t k = 0; k < frames; ++k) {
      const double a = start + sweep * static_cast<double>(k) /
                                   static_cast<double>(frames);
      const Vector3d eye =
          target + Vector3d(radius * std::cos(a), radius * std::sin(a), height);
      poses.push_back(look_at(eye, target));
    }
  } else {
    throw ParseError("unknown trajectory type '" + type + "'");
  }
  return poses;
}

}  // namespace

double Primitive::sdf(const Vector3d& p) const {
  const Vector3d q = pose.inverse() * p;
  switch (type) {
    case PrimitiveType::kPlane: {
      const double dx = std::max(std::abs(q.x()) - size.x() / 2, 0.0);
      const double dy = std::max(std::abs(q.y()) - size.y() / 2, 0.0);
      const double d = std::sqrt(dx * dx + dy * dy + q.z() * q.z());
      return q.z() < 0 ? -d : d;
    }
    case PrimitiveType::kBox:
      return box_sdf(q, size / 2);
    case PrimitiveType::kSphere:
      return q.norm() - radius;
    case PrimitiveType::kLPrism: {
      const auto arms = l_prism_arms(*this);
      return std::min(box_sdf(q - arms[0].first, arms[0].second),
                      box_sdf(q - arms[1].first, arms[1].second));
    }
  }
  return 0.0;
}

std::optional<double> Primitive::intersect(const Vector3d& origin,
                                           const Vector3d& dir) const {
  // Rigid transforms keep the ray parameter unchanged.
  const RigidPose inv = pose.inverse();
  const Vector3d o = inv * origin;
  const Vector3d d = inv.rotation() * dir;
  switch (type) {
    case PrimitiveType::kPlane: {
      if (std::abs(d.z()) < 1e-15) return std::nullopt;
      const double t = -o.z() / d.z();
      if (t <= kHitEpsilon) return std::nullopt;
      const Vector3d hit = o + t * d;
      if (std::abs(hit.x()) > size.x() / 2 || std::abs(hit.y()) > size.y() / 2) {
        return std::nullopt;
      }
      return t;
    }
    case PrimitiveType::kBox:
      return box_intersect(o, d, Vector3d::Zero(), size / 2);
    case PrimitiveType::kSphere: {
      const double a = d.squaredNorm();
      const double b = 2.0 * o.dot(d);
      const double c = o.squaredNorm() - radius * radius;
      const double disc = b * b - 4 * a * c;
      if (disc < 0) return std::nullopt;
      const double root = std::sqrt(disc);
      const double t1 = (-b - root) / (2 * a);
      if (t1 > kHitEpsilon) return t1;
      const double t2 = (-b + root) / (2 * a);
      if (t2 > kHitEpsilon) return t2;
      return std::nullopt;
    }
    case PrimitiveType::kLPrism: {
      const auto arms = l_prism_arms(*this);
      return nearest(box_intersect(o, d, arms[0].first, arms[0].second),
                     box_intersect(o, d, arms[1].first, arms[1].second));
    }
  }
  return std::nullopt;
}

std::pair<Vector3d, Vector3d> Primitive::bounds() const {
  if (type == PrimitiveType::kSphere) {
    const Vector3d r = Vector3d::Constant(radius);
    return {pose.translation() - r, pose.translation() + r};
  }
  const Vector3d half = size / 2;
  Vector3d lo = Vector3d::Constant(std::numeric_limits<double>::infinity());
  Vector3d hi = -lo;
  for (int c = 0; c < 8; ++c) {
    const Vector3d corner((c & 1) ? half.x() : -half.x(),
                          (c & 2) ? half.y() : -half.y(),
                          (c & 4) ? half.z() : -half.z());
    const Vector3d w = pose * corner;
    lo = lo.cwiseMin(w);
    hi = hi.cwiseMax(w);
  }
  return {lo, hi};
}

void SceneSpec::validate() const {
  intrinsics.validate();
  if (trajectory.empty()) throw Error("scene trajectory is empty");
  std::vector<InstanceId> ids;
  for (const Primitive& p : primitives) {
    switch (p.type) {
      case PrimitiveType::kPlane:
        if (!(p.size.x() > 0 && p.size.y() > 0)) {
          throw Error("plane size must be positive");
        }
        break;
      case PrimitiveType::kBox:
        if (!(p.size.minCoeff() > 0)) throw Error("box size must be positive");
        break;
      case PrimitiveType::kSphere:
        if (!(p.radius > 0)) throw Error("sphere radius must be positive");
        break;
      case PrimitiveType::kLPrism:
        if (!(p.size.minCoeff() > 0) || !(p.thickness > 0) ||
            p.thickness >= std::min(p.size.x(), p.size.y())) {
          throw Error("l_prism needs positive size and 0 < thickness < arms");
        }
        break;
    }
    if (p.instance != 0) {
      if (p.instance > 0xffff) throw Error("instance ids must fit 16 bits");
      if (p.class_id == 0) {
        throw Error("instance " + std::to_string(p.instance) +
                    " needs a nonzero class_id");
      }
      if (p.class_name.empty() ||
          p.class_name.find_first_of(" \t\r\n") != std::string::npos) {
        throw Error("class names must be nonempty and without whitespace");
      }
      ids.push_back(p.instance);
    }
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw Error("scene instance ids must be unique");
  }
  if (noise.coefficient < 0) throw Error("noise coefficient must be >= 0");
}

SceneSpec parse_scene(const std::string& json_text) {
  SceneSpec scene;
  try {
    const json j = json::parse(json_text);
    const json& in = j.at("intrinsics");
    scene.intrinsics = {in.at("fx").get<double>(), in.at("fy").get<double>(),
                        in.at("cx").get<double>(), in.at("cy").get<double>(),
                        in.at("width").get<int>(), in.at("height").get<int>()};
    if (j.contains("noise")) {
      scene.noise.coefficient = j["noise"].value("coefficient", 0.0);
      scene.noise.seed = j["noise"].value("seed", std::uint64_t{1});
    }
    for (const json& p : j.at("primitives")) {
      scene.primitives.push_back(parse_primitive(p));
    }
    scene.trajectory = parse_trajectory(j.at("trajectory"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene: ") + e.what());
  } catch (const ParseError& e) {
    throw ParseError(std::string("scene: ") + e.what());
  }
  try {
    scene.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("scene: ") + e.what());
  }
  return scene;
}

SceneSpec load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scene(buffer.str());
}

RenderedFrame render_depth(const SceneSpec& scene, const RigidPose& pose,
                           std::uint64_t frame_index) {
  const CameraIntrinsics& intr = scene.intrinsics;
  RenderedFrame frame{Image<float>(intr.width, intr.height, 0.0f),
                      Image<std::uint16_t>(intr.width, intr.height, 0),
                      Image<std::uint16_t>(intr.width, intr.height, 0)};
  std::mt19937_64 rng(scene.noise.seed ^
                      (frame_index * 0x9E3779B97F4A7C15ull));
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Vector3d origin = pose.translation();
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      // The camera-frame ray has z = 1, so the hit parameter is the depth.
      const Vector3d dir = pose.rotation() * intr.ray(u, v);
      double best = std::numeric_limits<double>::infinity();
      size_t hit = 0;
      for (size_t k = 0; k < scene.primitives.size(); ++k) {
        auto t = scene.primitives[k].intersect(origin, dir);
        if (t && *t < best) {
          best = *t;
          hit = k + 1;
        }
      }
      if (hit == 0) continue;
      double z = best;
      if (scene.noise.coefficient > 0) {
        z += scene.noise.coefficient * z * z * gauss(rng);
        if (z <= 0) continue;
      }
      frame.depth(u, v) = static_cast<float>(z);
      frame.primitive_ids(u, v) = static_cast<std::uint16_t>(hit);
      frame.instance_ids(u, v) =
          static_cast<std::uint16_t>(scene.primitives[hit - 1].instance);
    }
  }
  return frame;
}

MaskFrame ground_truth_masks(const SceneSpec& scene,
                             const RenderedFrame& frame) {
  std::map<InstanceId, size_t> pixels;
  for (std::uint16_t id : frame.instance_ids.data()) {
    if (id != 0) ++pixels[id];
  }
  std::vector<std::pair<InstanceId, size_t>> order(pixels.begin(),
                                                   pixels.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::map<InstanceId, InstanceId> local;
  MaskFrame masks;
  masks.ids = Image<std::uint16_t>(frame.instance_ids.width(),
                                   frame.instance_ids.height(), 0);
  for (size_t k = 0; k < order.size(); ++k) {
    const InstanceId id = static_cast<InstanceId>(k + 1);
    local[order[k].first] = id;
    for (const Primitive& p : scene.primitives) {
      if (p.instance == order[k].first) {
        masks.instances[id] = {p.class_id, p.class_name, 1.0};
      }
    }
  }
  for (size_t i = 0; i < masks.ids.size(); ++i) {
    const std::uint16_t id = frame.instance_ids[i];
    if (id != 0) masks.ids[i] = static_cast<std::uint16_t>(local[id]);
  }
  return masks;
}

GroundTruthVolume ground_truth_volume(const SceneSpec& scene,
                                      double voxel_size, double band) {
  if (!(voxel_size > 0) || !(band > 0)) {
    throw Error("voxel size and band must be positive");
  }
  GroundTruthVolume gt;
  gt.voxel_size = voxel_size;
  const auto& prims = scene.primitives;
  std::vector<double> dist(prims.size());

  for (size_t k = 0; k < prims.size(); ++k) {
    if (prims[k].instance == 0) continue;
    GroundTruthInstance inst{prims[k].instance, prims[k].class_id,
                             prims[k].class_name, {}};
    auto [lo, hi] = prims[k].bounds();
    const Eigen::Vector3i first =
        ((lo.array() - band) / voxel_size).floor().cast<int>();
    const Eigen::Vector3i last =
        ((hi.array() + band) / voxel_size).floor().cast<int>();
    // x outermost so voxels come out in IndexLess order.
    for (int x = first.x(); x <= last.x(); ++x) {
      for (int y = first.y(); y <= last.y(); ++y) {
        for (int z = first.z(); z <= last.z(); ++z) {
          const Vector3d c = (Vector3d(x, y, z).array() + 0.5) * voxel_size;
          if (std::abs(prims[k].sdf(c)) >= band) continue;
          size_t owner = 0;
          double best = std::numeric_limits<double>::infinity();
          for (size_t j = 0; j < prims.size(); ++j) {
            const double d = std::abs(prims[j].sdf(c));
            if (d < best) {
              best = d;
              owner = j;
            }
          }
          if (owner == k) inst.voxels.emplace_back(x, y, z);
        }
      }
    }
    gt.instances.push_back(std::move(inst));
  }
  std::sort(gt.instances.begin(), gt.instances.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return gt;
}

void save_ground_truth(const std::filesystem::path& path,
                       const GroundTruthVolume& gt) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", gt.voxel_size);
  out << "objmap-gt-volume 1\n"
      << "voxel_size " << buffer << "\n"
      << "instances " << gt.instances.size() << "\n";
  size_t total = 0;
  for (const auto& inst : gt.instances) {
    out << inst.id << ' ' << inst.class_id << ' ' << inst.class_name << '\n';
    total += inst.voxels.size();
  }
  out << "voxels " << total << "\n";
  for (const auto& inst : gt.instances) {
    for (const VoxelIndex& v : inst.voxels) {
      out << v.x() << ' ' << v.y() << ' ' << v.z() << ' ' << inst.id << '\n';
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

GroundTruthVolume load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open ground truth " + path.string());
  auto fail = [&](const std::string& what) {
    return ParseError(path.string() + ": " + what);
  };
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "objmap-gt-volume") {
    throw fail("not a ground-truth volume file");
  }
  if (version != 1) throw fail("unsupported version " + std::to_string(version));
  GroundTruthVolume gt;
  size_t n = 0;
  if (!(in >> word >> gt.voxel_size) || word != "voxel_size" ||
      !(gt.voxel_size > 0)) {
    throw fail("bad voxel_size record");
  }
  if (!(in >> word >> n) || word != "instances") {
    throw fail("bad instances record");
  }
  std::map<InstanceId, size_t> slot;
  for (size_t i = 0; i < n; ++i) {
    GroundTruthInstance inst;
    if (!(in >> inst.id >> inst.class_id >> inst.class_name) || inst.id == 0) {
      throw fail("bad instance record");
    }
    if (!slot.emplace(inst.id, gt.instances.size()).second) {
      throw fail("duplicate instance " + std::to_string(inst.id));
    }
    gt.instances.push_back(std::move(inst));
  }
  if (!(in >> word >> n) || word != "voxels") throw fail("bad voxels record");
  for (size_t i = 0; i < n; ++i) {
    VoxelIndex v;
    InstanceId id;
    if (!(in >> v.x() >> v.y() >> v.z() >> id)) throw fail("truncated voxels");
    auto it = slot.find(id);
    if (it == slot.end()) throw fail("voxel of unknown instance");
    gt.instances[it->second].voxels.push_back(v);
  }
  for (auto& inst : gt.instances) {
    std::sort(inst.voxels.begin(), inst.voxels.end(), IndexLess());
  }
  std::sort(gt.instances.begin(), gt.instances.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return gt;
}

void write_synthetic_dataset(const SceneSpec& scene,
                             const std::filesystem::path& root,
                             const SynthDatasetOptions& options) {
  scene.validate();
  std::filesystem::create_directories(root / "depth");
  if (options.write_masks) std::filesystem::create_directories(root / "masks");
  write_intrinsics(root / "intrinsics.txt", scene.intrinsics);

  std::vector<std::pair<std::string, RigidPose>> poses;
  for (size_t k = 0; k < scene.trajectory.size(); ++k) {
    char id[16];
    std::snprintf(id, sizeof(id), "%06zu", k);
    const RenderedFrame frame = render_depth(scene, scene.trajectory[k], k);
    write_png16(root / "depth" / (std::string(id) + ".png"),
                depth_to_millimeters(frame.depth));
    if (options.write_masks) {
      save_masks(root / "masks", id, ground_truth_masks(scene, frame));
    }
    poses.emplace_back(id, scene.trajectory[k]);
  }
  write_poses(root / "poses.txt", poses);
  if (options.write_ground_truth) {
    save_ground_truth(root / "gt_volume.txt",
                      ground_truth_volume(scene, options.gt_voxel_size,
                                          options.gt_band));
  }
}

}  // namespace objmap
