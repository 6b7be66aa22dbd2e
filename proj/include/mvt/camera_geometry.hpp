#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mvt {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Pinhole intrinsics with 5-coefficient Brown-Conrady distortion
// [k1, k2, p1, p2, k3].
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  std::array<double, 5> dist{};
  int width = 1;
  int height = 1;

  Mat3 matrix() const;
  // Throws InvalidArgument when fx/fy are not positive or the principal
  // point lies outside the sensor.
  void validate() const;
};

// World-to-camera pose, X_cam = R(rotvec) * X + tvec.
struct CameraExtrinsics {
  Vec3 rotvec = Vec3::Zero();
  Vec3 tvec = Vec3::Zero();

  Mat3 rotation() const;
  Vec3 center() const;
};

struct Camera {
  std::string name;
  CameraIntrinsics intrinsics;
  CameraExtrinsics extrinsics;
};

struct CameraRig {
  std::vector<Camera> cameras;
  double unit_scale = 1.0;  // millimetres per world unit

  std::size_t size() const { return cameras.size(); }
  // Index of the named camera; throws InvalidArgument when absent.
  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const;
  void validate() const;
};

Mat3 rodrigues(const Vec3& rotvec);
// Inverse of rodrigues; the returned vector has norm in [0, pi].
Vec3 rotation_to_rotvec(const Mat3& rotation);

Vec2 distort_normalized(const Vec2& xy, const std::array<double, 5>& dist);

// Throws NonPositiveDepth when the point is not in front of the camera.
Vec2 project_point(const CameraIntrinsics& intr, const CameraExtrinsics& extr, const Vec3& world_pt);
Vec2 project_point(const Camera& cam, const Vec3& world_pt);

// Pixel to normalized image coordinates (distortion removed). Throws
// NoConvergence when the fixed-point iteration fails to settle.
Vec2 undistort_point(const CameraIntrinsics& intr, const Vec2& pixel);

double camera_depth(const CameraExtrinsics& extr, const Vec3& world_pt);

// Applies a rigid world transform X' = R X + t to every camera pose so that
// the rig observes transformed points identically.
CameraRig transform_rig(const CameraRig& rig, const Mat3& rotation, const Vec3& translation);

}  // namespace mvt
