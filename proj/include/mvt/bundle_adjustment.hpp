#pragma once

#include <Eigen/Core>
#include <vector>

#include "mvt/camera_geometry.hpp"

namespace mvt {

// Joint refinement of camera intrinsics, distortion, extrinsics and board
// poses. Per camera the block is [fx fy cx cy k1 k2 p1 p2 k3 rx ry rz tx ty tz];
// per board pose [rx ry rz tx ty tz]. Camera 0's pose is held at identity
// and does not appear in the parameter vector.
class BundleProblem {
 public:
  struct Observation {
    int camera = 0;
    int pose = 0;
    Vec3 board_point = Vec3::Zero();
    Vec2 pixel = Vec2::Zero();
  };

  static constexpr int kCameraBlock = 15;
  static constexpr int kPoseBlock = 6;

  BundleProblem(int num_cameras, int num_poses, std::vector<Observation> observations);

  int num_cameras() const { return num_cameras_; }
  int num_poses() const { return num_poses_; }
  int num_parameters() const { return num_parameters_; }
  const std::vector<Observation>& observations() const { return observations_; }

  Eigen::VectorXd pack(const std::vector<CameraIntrinsics>& intrinsics, const std::vector<CameraExtrinsics>& cameras,
                       const std::vector<CameraExtrinsics>& poses) const;
  void unpack(const Eigen::VectorXd& params, std::vector<CameraIntrinsics>& intrinsics,
              std::vector<CameraExtrinsics>& cameras, std::vector<CameraExtrinsics>& poses) const;

  // Stacked (predicted - observed) pixel residuals, two per observation.
  Eigen::VectorXd residuals(const Eigen::VectorXd& params) const;
  // Dense Jacobian of residuals(); meant for checks and small problems.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& params) const;

  // Huber-weighted Gauss-Newton system (J^T W J, J^T W r) and robust cost.
  // The cost uses rho(s) = s^2 for s <= delta and 2 delta s - delta^2 beyond.
  double normal_equations(const Eigen::VectorXd& params, double huber_delta, Eigen::MatrixXd& hessian,
                          Eigen::VectorXd& gradient) const;
  double robust_cost(const Eigen::VectorXd& params, double huber_delta) const;

 private:
  // Global parameter index for each of the 21 local parameters of an
  // observation, -1 when held fixed.
  void local_indices(const Observation& obs, int (&idx)[21]) const;
  int camera_offset(int camera) const;
  int pose_offset(int pose) const;

  int num_cameras_;
  int num_poses_;
  int num_parameters_;
  std::vector<Observation> observations_;
};

struct LevenbergMarquardtOptions {
  double huber_delta = 2.0;
  double initial_damping = 1e-3;
  int max_iterations = 200;
  double relative_tolerance = 1e-10;
};

struct LevenbergMarquardtSummary {
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;
};

LevenbergMarquardtSummary solve_bundle(const BundleProblem& problem, Eigen::VectorXd& params,
                                       const LevenbergMarquardtOptions& options);

}  // namespace mvt
