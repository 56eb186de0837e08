#include "objmap/geometry.h"

#include <cmath>
#include <limits>
#include <string>

namespace objmap {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error("camera focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error("camera image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error("camera principal point lies outside the image");
  }
}

RigidPose::RigidPose(const Eigen::Quaterniond& rotation,
                     const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  const double norm = rotation_.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error("pose rotation quaternion has zero or invalid norm");
  }
  rotation_.coeffs() /= norm;
}

RigidPose RigidPose::from_matrix(const Eigen::Matrix4d& matrix) {
  const Eigen::Matrix3d rotation = matrix.topLeftCorner<3, 3>();
  return RigidPose(Eigen::Quaterniond(rotation), matrix.topRightCorner<3, 1>());
}

RigidPose RigidPose::inverse() const {
  const Eigen::Quaterniond inv = rotation_.conjugate();
  return RigidPose(inv, -(inv * translation_));
}

Eigen::Matrix4d RigidPose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_.toRotationMatrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidPose RigidPose::operator*(const RigidPose& other) const {
  return RigidPose(rotation_ * other.rotation_,
                   rotation_ * other.translation_ + translation_);
}

RigidPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                  const Eigen::Vector3d& up) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d right = forward.cross(up);
  if (right.norm() < 1e-9) {
    // Looking along `up`; any perpendicular works.
    right = forward.unitOrthogonal();
  }
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d rotation;
  rotation.col(0) = right;
  rotation.col(1) = down;
  rotation.col(2) = forward;
  return RigidPose(Eigen::Quaterniond(rotation), eye);
}

VertexMap unproject(const Image<float>& depth, const CameraIntrinsics& intr,
                    double max_range) {
  if (!depth.same_shape(intr.width, intr.height)) {
    throw DimensionError("depth image is " + std::to_string(depth.width()) +
                         "x" + std::to_string(depth.height()) +
                         " but the camera expects " +
                         std::to_string(intr.width) + "x" +
                         std::to_string(intr.height));
  }
  VertexMap vmap{Image<Eigen::Vector3f>(depth.width(), depth.height(),
                                        Eigen::Vector3f::Zero()),
                 Image<std::uint8_t>(depth.width(), depth.height(), 0)};
  const double inv_fx = 1.0 / intr.fx;
  const double inv_fy = 1.0 / intr.fy;
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      const double d = depth(u, v);
      if (!(d > 0.0) || d > max_range) {
        continue;
      }
      vmap.points(u, v) =
          Eigen::Vector3d(d * (u - intr.cx) * inv_fx,
                          d * (v - intr.cy) * inv_fy, d)
              .cast<float>();
      vmap.valid(u, v) = 1;
    }
  }
  return vmap;
}

Projection project(const Eigen::Vector3d& point_world, const RigidPose& pose,
                   const CameraIntrinsics& intr) {
  const Eigen::Vector3d p =
      pose.rotation().conjugate() * (point_world - pose.translation());
  Projection result;
  result.z = p.z();
  if (!(p.z() > 0.0)) {
    result.status = Projection::Status::kBehindCamera;
    return result;
  }
  result.u = intr.fx * p.x() / p.z() + intr.cx;
  result.v = intr.fy * p.y() / p.z() + intr.cy;
  // Pixel (i, j) covers [i - 0.5, i + 0.5) x [j - 0.5, j + 0.5).
  const bool inside = result.u >= -0.5 && result.v >= -0.5 &&
                      result.u < intr.width - 0.5 &&
                      result.v < intr.height - 0.5;
  result.status = inside ? Projection::Status::kInFrame
                         : Projection::Status::kOutOfFrame;
  return result;
}

Image<float> depth_from_millimeters(const Image<std::uint16_t>& depth_mm) {
  Image<float> out(depth_mm.width(), depth_mm.height(), 0.0f);
  for (size_t i = 0; i < depth_mm.size(); ++i) {
    out[i] = static_cast<float>(depth_mm[i]) / 1000.0f;
  }
  return out;
}

Image<std::uint16_t> depth_to_millimeters(const Image<float>& depth_m) {
  Image<std::uint16_t> out(depth_m.width(), depth_m.height(), 0);
  constexpr double kMax = std::numeric_limits<std::uint16_t>::max();
  for (size_t i = 0; i < depth_m.size(); ++i) {
    const double mm = std::round(static_cast<double>(depth_m[i]) * 1000.0);
    out[i] = (mm > 0.0 && mm <= kMax) ? static_cast<std::uint16_t>(mm) : 0;
  }
  return out;
}

}  // namespace objmap
