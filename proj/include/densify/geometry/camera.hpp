#ifndef DENSIFY_GEOMETRY_CAMERA_HPP
#define DENSIFY_GEOMETRY_CAMERA_HPP

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>

#include "densify/common.hpp"

namespace densify {

// Pinhole model, no distortion. Pixel (i, j) has its center at continuous
// coordinates (i, j); the image spans [0, width) x [0, height).
struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const {
    if (!(fx > 0) || !(fy > 0))
      throw Error::data("bad-intrinsics", "focal lengths must be positive");
    if (width < 1 || height < 1)
      throw Error::data("bad-intrinsics", "image size must be >= 1");
    if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height))
      throw Error::data("bad-intrinsics",
                        "principal point must lie inside the image");
  }

  double diagonal() const { return std::hypot(double(width), double(height)); }

  Intrinsics scaled(double rx, double ry, int new_w, int new_h) const {
    return Intrinsics{fx * rx, fy * ry, cx * rx, cy * ry, new_w, new_h};
  }

  bool operator==(const Intrinsics&) const = default;
};

// Rigid transform in the camera-from-world convention: x_cam = R x_world + t.
class Pose {
 public:
  static constexpr double kRigidTol = 1e-9;

  Pose() : rotation_(Eigen::Matrix3d::Identity()),
           translation_(Eigen::Vector3d::Zero()) {}

  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {
    check_rigid(rotation);
  }

  // Checks R^T R = I and det(R) = +1 within kRigidTol; throws otherwise.
  static void check_rigid(const Eigen::Matrix3d& r) {
    const double ortho =
        (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (ortho > kRigidTol)
      throw Error::data("non-rigid-pose",
                        "rotation is not orthonormal (drift " +
                            std::to_string(ortho) + ")");
    const double det = r.determinant();
    if (std::abs(det - 1.0) > kRigidTol)
      throw Error::data("non-rigid-pose",
                        "rotation determinant is " + std::to_string(det) +
                            ", expected +1");
  }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation_ * world + translation_;
  }
  Eigen::Vector3d to_world(const Eigen::Vector3d& cam) const {
    return rotation_.transpose() * (cam - translation_);
  }
  Eigen::Vector3d camera_center() const {
    return -(rotation_.transpose() * translation_);
  }

  Pose inverse() const {
    return Pose(Eigen::Matrix3d(rotation_.transpose()),
                Eigen::Vector3d(-(rotation_.transpose() * translation_)));
  }

  // this ∘ other: applies `other` first.
  Pose compose(const Pose& other) const {
    return Pose(Eigen::Matrix3d(rotation_ * other.rotation_),
                Eigen::Vector3d(rotation_ * other.translation_ + translation_));
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

struct Projection {
  Eigen::Vector2d uv;  // continuous pixel coordinates
  double depth = 0;    // camera-space z
};

// Total function: returns nullopt when the point is behind the camera
// (z <= 0) or projects outside [0, width) x [0, height).
inline std::optional<Projection> project_point(const Eigen::Vector3d& world,
                                               const Pose& pose,
                                               const Intrinsics& intr) {
  const Eigen::Vector3d cam = pose.to_camera(world);
  if (!(cam.z() > 0)) return std::nullopt;
  const double u = intr.fx * cam.x() / cam.z() + intr.cx;
  const double v = intr.fy * cam.y() / cam.z() + intr.cy;
  if (!(u >= 0 && u < intr.width && v >= 0 && v < intr.height))
    return std::nullopt;
  return Projection{{u, v}, cam.z()};
}

inline Eigen::Vector3d backproject_pixel(const Eigen::Vector2d& uv, double z,
                                         const Pose& pose,
                                         const Intrinsics& intr) {
  if (!(z > 0))
    throw Error::data("invalid-depth",
                      "backprojection requires a positive depth");
  if (!(uv.x() >= 0 && uv.x() < intr.width && uv.y() >= 0 &&
        uv.y() < intr.height))
    throw Error::data("pixel-outside-image",
                      "backprojection requires a pixel inside the image");
  const Eigen::Vector3d cam((uv.x() - intr.cx) * z / intr.fx,
                            (uv.y() - intr.cy) * z / intr.fy, z);
  return pose.to_world(cam);
}

}  // namespace densify

#endif  // DENSIFY_GEOMETRY_CAMERA_HPP
