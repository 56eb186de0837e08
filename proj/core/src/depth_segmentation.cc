#include "objmap/depth_segmentation.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace objmap {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Disjoint-set forest over pixel indices.
class UnionFind {
 public:
  explicit UnionFind(size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller index becomes the root, so roots are first pixels in
  // row-major order.
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) {
      return;
    }
    if (a < b) {
      parent_[b] = a;
    } else {
      parent_[a] = b;
    }
  }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace

void SegmentationConfig::validate() const {
  if (!(concavity_angle_deg > 0.0 && concavity_angle_deg < 180.0)) {
    throw Error("concavity angle must lie in (0, 180) degrees");
  }
  if (!(min_distance > 0.0) || !(distance_factor > 0.0)) {
    throw Error("depth discontinuity thresholds must be positive");
  }
  if (min_region_size < 1) {
    throw Error("minimum region size must be positive");
  }
}

NormalMap estimate_normals(const VertexMap& vmap) {
  const int width = vmap.width();
  const int height = vmap.height();
  NormalMap nmap{Image<Eigen::Vector3f>(width, height, Eigen::Vector3f::Zero()),
                 Image<std::uint8_t>(width, height, 0)};
  for (int v = 1; v + 1 < height; ++v) {
    for (int u = 1; u + 1 < width; ++u) {
      if (!vmap.is_valid(u, v) || !vmap.is_valid(u - 1, v) ||
          !vmap.is_valid(u + 1, v) || !vmap.is_valid(u, v - 1) ||
          !vmap.is_valid(u, v + 1)) {
        continue;
      }
      const Eigen::Vector3f du =
          vmap.points(u + 1, v) - vmap.points(u - 1, v);
      const Eigen::Vector3f dv =
          vmap.points(u, v + 1) - vmap.points(u, v - 1);
      Eigen::Vector3f n = du.cross(dv);
      const float norm = n.norm();
      if (!(norm > 1e-12f)) {
        continue;
      }
      n /= norm;
      if (n.dot(vmap.points(u, v)) > 0.0f) {
        n = -n;
      }
      nmap.normals(u, v) = n;
      nmap.valid(u, v) = 1;
    }
  }
  return nmap;
}

EdgeLabel edge_classify(const VertexMap& vmap, const NormalMap& nmap, int pu,
                        int pv, int qu, int qv,
                        const SegmentationConfig& config) {
  if (!vmap.is_valid(pu, pv) || !vmap.is_valid(qu, qv) ||
      !nmap.is_valid(pu, pv) || !nmap.is_valid(qu, qv)) {
    return EdgeLabel::kBoundary;
  }
  const Eigen::Vector3f& vp = vmap.points(pu, pv);
  const Eigen::Vector3f& vq = vmap.points(qu, qv);
  const Eigen::Vector3f step = vq - vp;
  const double depth = std::max(vp.z(), vq.z());
  if (step.norm() > config.distance_threshold(depth)) {
    return EdgeLabel::kBoundary;
  }
  const Eigen::Vector3f& np = nmap.normals(pu, pv);
  const Eigen::Vector3f& nq = nmap.normals(qu, qv);
  const double cos_threshold =
      std::cos(config.concavity_angle_deg * kPi / 180.0);
  // Concave when the step rises against p's normal; evaluated from both
  // sides, (q - p).n_p + (p - q).n_q, to make the relation symmetric.
  if (np.dot(nq) < cos_threshold && step.dot(np - nq) > 0.0f) {
    return EdgeLabel::kBoundary;
  }
  return EdgeLabel::kConnected;
}

FrameSegmentation segment_frame(const VertexMap& vmap, const NormalMap& nmap,
                                const SegmentationConfig& config,
                                int point_stride) {
  if (!vmap.points.same_shape(nmap.normals)) {
    throw DimensionError("vertex and normal maps differ in size");
  }
  if (point_stride < 1) {
    throw Error("point stride must be at least 1");
  }
  const int width = vmap.width();
  const int height = vmap.height();
  const size_t n_pixels = vmap.points.size();

  auto usable = [&](int u, int v) {
    return vmap.is_valid(u, v) && nmap.is_valid(u, v);
  };

  UnionFind forest(n_pixels);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      if (!usable(u, v)) {
        continue;
      }
      const auto p = static_cast<std::uint32_t>(vmap.points.index(u, v));
      if (u + 1 < width &&
          edge_classify(vmap, nmap, u, v, u + 1, v, config) ==
              EdgeLabel::kConnected) {
        forest.unite(p, p + 1);
      }
      if (v + 1 < height &&
          edge_classify(vmap, nmap, u, v, u, v + 1, config) ==
              EdgeLabel::kConnected) {
        forest.unite(p, p + static_cast<std::uint32_t>(width));
      }
    }
  }

  std::vector<std::uint32_t> component_size(n_pixels, 0);
  for (std::uint32_t i = 0; i < n_pixels; ++i) {
    if (vmap.valid[i] && nmap.valid[i]) {
      ++component_size[forest.find(i)];
    }
  }

  FrameSegmentation result;
  result.region_map = Image<RegionId>(width, height, 0);
  // Roots are first pixels, so scanning roots in index order yields
  // row-major discovery order.
  std::vector<RegionId> root_region(n_pixels, 0);
  for (std::uint32_t i = 0; i < n_pixels; ++i) {
    if (component_size[i] >= static_cast<std::uint32_t>(config.min_region_size)) {
      Region2D region;
      region.id = static_cast<RegionId>(result.regions.size() + 1);
      region.pixels.reserve(component_size[i]);
      root_region[i] = region.id;
      result.regions.push_back(std::move(region));
    }
  }
  for (std::uint32_t i = 0; i < n_pixels; ++i) {
    if (!(vmap.valid[i] && nmap.valid[i])) {
      continue;
    }
    const RegionId id = root_region[forest.find(i)];
    if (id != 0) {
      result.region_map[i] = id;
      result.regions[id - 1].pixels.push_back(i);
    }
  }

  result.segments.reserve(result.regions.size());
  for (const Region2D& region : result.regions) {
    FrameSegment segment;
    segment.region = region;
    segment.stride = point_stride;
    segment.points.reserve(region.pixels.size() /
                               static_cast<size_t>(point_stride) +
                           1);
    for (size_t k = 0; k < region.pixels.size();
         k += static_cast<size_t>(point_stride)) {
      segment.points.push_back(vmap.points[region.pixels[k]]);
    }
    result.segments.push_back(std::move(segment));
  }
  return result;
}

}  // namespace objmap
