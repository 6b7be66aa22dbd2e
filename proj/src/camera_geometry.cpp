#include "mvt/camera_geometry.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <set>

#include "mvt/error.hpp"

namespace mvt {

namespace {

constexpr int kUndistortMaxIterations = 50;
constexpr double kUndistortStepTolerance = 1e-9;

}  // namespace

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) fail(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "sensor size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    fail(ErrorCode::InvalidArgument, "principal point outside the sensor");
  for (double d : dist)
    if (!std::isfinite(d)) fail(ErrorCode::InvalidArgument, "non-finite distortion coefficient");
}

Mat3 CameraExtrinsics::rotation() const { return rodrigues(rotvec); }

Vec3 CameraExtrinsics::center() const { return -(rotation().transpose() * tvec); }

std::size_t CameraRig::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < cameras.size(); ++i)
    if (cameras[i].name == name) return i;
  fail(ErrorCode::InvalidArgument, "camera '" + std::string(name) + "' is not part of the rig");
}

bool CameraRig::contains(std::string_view name) const {
  for (const auto& c : cameras)
    if (c.name == name) return true;
  return false;
}

void CameraRig::validate() const {
  std::set<std::string> names;
  for (const auto& c : cameras) {
    if (!names.insert(c.name).second) fail(ErrorCode::InvalidArgument, "duplicate camera name '" + c.name + "'");
    c.intrinsics.validate();
  }
  if (!(unit_scale > 0.0)) fail(ErrorCode::InvalidArgument, "unit_scale must be positive");
}

Mat3 rodrigues(const Vec3& rotvec) {
  const double theta = rotvec.norm();
  if (theta == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(theta, rotvec / theta).toRotationMatrix();
}

Vec3 rotation_to_rotvec(const Mat3& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  return aa.axis() * aa.angle();
}

Vec2 distort_normalized(const Vec2& xy, const std::array<double, 5>& d) {
  const double x = xy.x();
  const double y = xy.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (d[0] + r2 * (d[1] + r2 * d[4]));
  const double dx = 2.0 * d[2] * x * y + d[3] * (r2 + 2.0 * x * x);
  const double dy = d[2] * (r2 + 2.0 * y * y) + 2.0 * d[3] * x * y;
  return {x * radial + dx, y * radial + dy};
}

Vec2 project_point(const CameraIntrinsics& intr, const CameraExtrinsics& extr, const Vec3& world_pt) {
  const Vec3 pc = extr.rotation() * world_pt + extr.tvec;
  if (!(pc.z() > 0.0)) fail(ErrorCode::NonPositiveDepth, "point is behind the camera");
  const Vec2 xd = distort_normalized({pc.x() / pc.z(), pc.y() / pc.z()}, intr.dist);
  return {intr.fx * xd.x() + intr.cx, intr.fy * xd.y() + intr.cy};
}

Vec2 project_point(const Camera& cam, const Vec3& world_pt) {
  return project_point(cam.intrinsics, cam.extrinsics, world_pt);
}

Vec2 undistort_point(const CameraIntrinsics& intr, const Vec2& pixel) {
  const Vec2 xd((pixel.x() - intr.cx) / intr.fx, (pixel.y() - intr.cy) / intr.fy);
  const auto& d = intr.dist;
  Vec2 p = xd;
  for (int it = 0; it < kUndistortMaxIterations; ++it) {
    const double x = p.x();
    const double y = p.y();
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (d[0] + r2 * (d[1] + r2 * d[4]));
    const double dx = 2.0 * d[2] * x * y + d[3] * (r2 + 2.0 * x * x);
    const double dy = d[2] * (r2 + 2.0 * y * y) + 2.0 * d[3] * x * y;
    const Vec2 next((xd.x() - dx) / radial, (xd.y() - dy) / radial);
    if (!next.allFinite()) break;
    const double step = (next - p).norm();
    p = next;
    if (step < kUndistortStepTolerance) return p;
  }
  fail(ErrorCode::NoConvergence, "undistortion did not converge");
}

double camera_depth(const CameraExtrinsics& extr, const Vec3& world_pt) {
  return (extr.rotation() * world_pt + extr.tvec).z();
}

CameraRig transform_rig(const CameraRig& rig, const Mat3& rotation, const Vec3& translation) {
  // X_cam = R_c X + t_c with X = Rw^T (X' - tw).
  CameraRig out = rig;
  for (auto& cam : out.cameras) {
    const Mat3 rc = cam.extrinsics.rotation();
    const Mat3 r_new = rc * rotation.transpose();
    cam.extrinsics.rotvec = rotation_to_rotvec(r_new);
    cam.extrinsics.tvec = cam.extrinsics.tvec - r_new * translation;
  }
  return out;
}

}  // namespace mvt
