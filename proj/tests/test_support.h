// Shared fixtures and hand-rolled generators for the test suites.
#ifndef OBJMAP_TESTS_TEST_SUPPORT_H_
#define OBJMAP_TESTS_TEST_SUPPORT_H_

#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "objmap/depth_segmentation.h"
#include "objmap/geometry.h"
#include "objmap/instance_ingest.h"
#include "objmap/synth.h"

namespace objmap::testing {

inline CameraIntrinsics small_camera(int width = 64, int height = 48) {
  return {0.9 * width, 0.9 * width, (width - 1) / 2.0, (height - 1) / 2.0,
          width, height};
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline RigidPose random_pose(std::mt19937_64& rng, double spread = 2.0) {
  Eigen::Quaterniond q(uniform(rng, -1, 1), uniform(rng, -1, 1),
                       uniform(rng, -1, 1), uniform(rng, -1, 1));
  if (q.norm() < 1e-3) q = Eigen::Quaterniond::Identity();
  return RigidPose(q, Eigen::Vector3d(uniform(rng, -spread, spread),
                                      uniform(rng, -spread, spread),
                                      uniform(rng, -spread, spread)));
}

// A random box-and-sphere scene on a floor, viewed from a random point on a
// ring around it.
inline SceneSpec random_scene(std::mt19937_64& rng, int width, int height) {
  SceneSpec scene;
  scene.intrinsics = small_camera(width, height);
  Primitive floor;
  floor.type = PrimitiveType::kPlane;
  floor.size = {4, 4, 0};
  scene.primitives.push_back(floor);
  const int n = uniform_int(rng, 1, 4);
  for (int k = 0; k < n; ++k) {
    Primitive p;
    p.instance = static_cast<InstanceId>(k + 1);
    p.class_id = static_cast<ClassId>(uniform_int(rng, 1, 3));
    p.class_name = "c" + std::to_string(p.class_id);
    const double x = uniform(rng, -0.6, 0.6);
    const double y = uniform(rng, -0.6, 0.6);
    switch (uniform_int(rng, 0, 2)) {
      case 0:
        p.type = PrimitiveType::kBox;
        p.size = {uniform(rng, 0.1, 0.4), uniform(rng, 0.1, 0.4),
                  uniform(rng, 0.1, 0.5)};
        p.pose = RigidPose(
            Eigen::Quaterniond(Eigen::AngleAxisd(uniform(rng, 0, 3),
                                                 Eigen::Vector3d::UnitZ())),
            {x, y, p.size.z() / 2});
        break;
      case 1:
        p.type = PrimitiveType::kSphere;
        p.radius = uniform(rng, 0.08, 0.25);
        p.pose = RigidPose(Eigen::Quaterniond::Identity(),
                           {x, y, p.radius + uniform(rng, 0, 0.2)});
        break;
      default:
        p.type = PrimitiveType::kLPrism;
        p.size = {uniform(rng, 0.2, 0.5), uniform(rng, 0.2, 0.5),
                  uniform(rng, 0.1, 0.4)};
        p.thickness = uniform(rng, 0.05, 0.15);
        p.pose = RigidPose(Eigen::Quaterniond::Identity(),
                           {x, y, p.size.z() / 2});
        break;
    }
    scene.primitives.push_back(p);
  }
  const double a = uniform(rng, 0, 6.283);
  const double r = uniform(rng, 1.5, 2.5);
  scene.trajectory.push_back(look_at(
      {r * std::cos(a), r * std::sin(a), uniform(rng, 0.5, 1.5)},
      {0, 0, 0.15}));
  return scene;
}

// Random id raster with blobby masks: a few random rectangles, later ones
// painting over earlier ones.
inline MaskFrame random_masks(std::mt19937_64& rng, int width, int height,
                              int max_masks = 5) {
  MaskFrame m;
  m.ids = Image<std::uint16_t>(width, height, 0);
  const int n = uniform_int(rng, 0, max_masks);
  for (int k = 1; k <= n; ++k) {
    const int u0 = uniform_int(rng, 0, width - 1);
    const int v0 = uniform_int(rng, 0, height - 1);
    const int u1 = std::min(width, u0 + uniform_int(rng, 1, width / 2));
    const int v1 = std::min(height, v0 + uniform_int(rng, 1, height / 2));
    for (int v = v0; v < v1; ++v) {
      for (int u = u0; u < u1; ++u) m.ids(u, v) = static_cast<std::uint16_t>(k);
    }
    m.instances[k] = {static_cast<ClassId>(uniform_int(rng, 1, 4)), "c", 0.5};
  }
  return m;
}

// Brute-force segmentation: BFS flood fill over edge_classify, the slow
// reference for segment_frame.
inline Image<RegionId> flood_fill_regions(const VertexMap& vmap,
                                          const NormalMap& nmap,
                                          const SegmentationConfig& config) {
  const int w = vmap.width();
  const int h = vmap.height();
  Image<int> comp(w, h, -1);
  std::vector<std::vector<std::pair<int, int>>> comps;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!vmap.is_valid(u, v) || !nmap.is_valid(u, v) || comp(u, v) >= 0) {
        continue;
      }
      const int id = static_cast<int>(comps.size());
      comps.emplace_back();
      std::deque<std::pair<int, int>> queue{{u, v}};
      comp(u, v) = id;
      while (!queue.empty()) {
        auto [pu, pv] = queue.front();
        queue.pop_front();
        comps[id].push_back({pu, pv});
        const int du[4] = {1, -1, 0, 0};
        const int dv[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const int qu = pu + du[d];
          const int qv = pv + dv[d];
          if (!vmap.points.contains(qu, qv) || comp(qu, qv) >= 0) continue;
          if (edge_classify(vmap, nmap, pu, pv, qu, qv, config) ==
              EdgeLabel::kConnected) {
            comp(qu, qv) = id;
            queue.push_back({qu, qv});
          }
        }
      }
    }
  }
  // Components were discovered in row-major order of their first pixel.
  Image<RegionId> out(w, h, 0);
  RegionId next = 1;
  for (const auto& c : comps) {
    if (static_cast<int>(c.size()) < config.min_region_size) continue;
    for (auto [u, v] : c) out(u, v) = next;
    ++next;
  }
  return out;
}

}  // namespace objmap::testing

#endif  // OBJMAP_TESTS_TEST_SUPPORT_H_
