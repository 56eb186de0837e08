#ifndef OBJMAP_GEOMETRY_H_
#define OBJMAP_GEOMETRY_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace objmap {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two rasters (or a raster and a camera) disagree on their dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A file or record could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Row-major raster of per-pixel values.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, const T& fill = T{})
      : width_(width),
        height_(height),
        data_(static_cast<size_t>(width) * static_cast<size_t>(height), fill) {
    if (width < 0 || height < 0) {
      throw DimensionError("negative image dimensions");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int u, int v) const {
    return u >= 0 && v >= 0 && u < width_ && v < height_;
  }
  size_t index(int u, int v) const {
    return static_cast<size_t>(v) * static_cast<size_t>(width_) +
           static_cast<size_t>(u);
  }

  T& operator()(int u, int v) { return data_[index(u, v)]; }
  const T& operator()(int u, int v) const { return data_[index(u, v)]; }
  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool same_shape(int width, int height) const {
    return width_ == width && height_ == height;
  }
  template <typename U>
  bool same_shape(const Image<U>& other) const {
    return same_shape(other.width(), other.height());
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Pinhole camera without distortion.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  // Throws objmap::Error when fx, fy are not positive or the principal point
  // lies outside the image.
  void validate() const;

  Eigen::Vector3d ray(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }
};

// Rigid transform. For camera poses the convention is camera-to-world, so
// `pose * p_camera` yields world coordinates.
class RigidPose {
 public:
  RigidPose() = default;
  // Normalizes the quaternion; throws if its norm is zero.
  RigidPose(const Eigen::Quaterniond& rotation,
            const Eigen::Vector3d& translation);

  static RigidPose identity() { return {}; }
  static RigidPose from_matrix(const Eigen::Matrix4d& matrix);

  const Eigen::Quaterniond& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  RigidPose inverse() const;
  Eigen::Matrix4d matrix() const;

  Eigen::Vector3d operator*(const Eigen::Vector3d& point) const {
    return rotation_ * point + translation_;
  }
  RigidPose operator*(const RigidPose& other) const;

 private:
  Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

// Camera-to-world pose looking from `eye` toward `target`, with camera axes in
// the usual optical convention (x right, y down, z forward).
RigidPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                  const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ());

inline constexpr double kDefaultMaxRange = 5.0;

// Per-pixel camera-frame points. Invalid pixels hold zero vectors.
struct VertexMap {
  Image<Eigen::Vector3f> points;
  Image<std::uint8_t> valid;

  int width() const { return points.width(); }
  int height() const { return points.height(); }
  bool is_valid(int u, int v) const { return valid(u, v) != 0; }
};

// Depth in meters, 0 marks invalid. Values beyond `max_range` are invalid.
VertexMap unproject(const Image<float>& depth, const CameraIntrinsics& intr,
                    double max_range = kDefaultMaxRange);

struct Projection {
  enum class Status { kInFrame, kOutOfFrame, kBehindCamera };
  Status status = Status::kBehindCamera;
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;

  bool in_frame() const { return status == Status::kInFrame; }
};

// Projects a world point through a camera-to-world pose. Points with z <= 0
// are reported as behind the camera; points whose nearest pixel center is
// outside the image as out of frame.
Projection project(const Eigen::Vector3d& point_world, const RigidPose& pose,
                   const CameraIntrinsics& intr);

// 16-bit millimeter depth to meters; zero stays zero.
Image<float> depth_from_millimeters(const Image<std::uint16_t>& depth_mm);
// Meters to 16-bit millimeters, rounded; values that do not fit become 0.
Image<std::uint16_t> depth_to_millimeters(const Image<float>& depth_m);

}  // namespace objmap

#endif  // OBJMAP_GEOMETRY_H_
