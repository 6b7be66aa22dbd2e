#include "mvt/bundle_adjustment.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <unsupported/Eigen/AutoDiff>

#include "mvt/error.hpp"

namespace mvt {

namespace {

using Derivatives = Eigen::Matrix<double, 21, 1>;
using Dual = Eigen::AutoDiffScalar<Derivatives>;

inline double value_of(double v) { return v; }
inline double value_of(const Dual& v) { return v.value(); }

// out = R(r) v via the Rodrigues formula; second-order series near zero.
template <typename T>
void rotate(const T* r, const T* v, T* out) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const T theta2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
  const T cross[3] = {r[1] * v[2] - r[2] * v[1], r[2] * v[0] - r[0] * v[2], r[0] * v[1] - r[1] * v[0]};
  if (value_of(theta2) > 1e-16) {
    const T theta = sqrt(theta2);
    const T c = cos(theta);
    const T s = sin(theta);
    const T k_dot_v = (r[0] * v[0] + r[1] * v[1] + r[2] * v[2]) / theta2;
    const T sin_over = s / theta;
    const T one_minus = T(1.0) - c;
    for (int i = 0; i < 3; ++i) out[i] = v[i] * c + cross[i] * sin_over + r[i] * k_dot_v * one_minus;
  } else {
    const T cross2[3] = {r[1] * cross[2] - r[2] * cross[1], r[2] * cross[0] - r[0] * cross[2],
                         r[0] * cross[1] - r[1] * cross[0]};
    for (int i = 0; i < 3; ++i) out[i] = v[i] + cross[i] + T(0.5) * cross2[i];
  }
}

// Predicted pixel for a board point. cam = 15-block, pose = 6-block.
// Returns false when the point lands at non-positive depth.
template <typename T>
bool predict(const T* cam, const T* pose, const Vec3& board_point, T* pixel) {
  const T pb[3] = {T(board_point.x()), T(board_point.y()), T(board_point.z())};
  T pw[3];
  rotate(pose, pb, pw);
  for (int i = 0; i < 3; ++i) pw[i] += pose[3 + i];
  T pc[3];
  rotate(cam + 9, pw, pc);
  for (int i = 0; i < 3; ++i) pc[i] += cam[12 + i];
  if (!(value_of(pc[2]) > 0.0)) return false;
  const T x = pc[0] / pc[2];
  const T y = pc[1] / pc[2];
  const T r2 = x * x + y * y;
  const T radial = T(1.0) + r2 * (cam[4] + r2 * (cam[5] + r2 * cam[8]));
  const T dx = T(2.0) * cam[6] * x * y + cam[7] * (r2 + T(2.0) * x * x);
  const T dy = cam[6] * (r2 + T(2.0) * y * y) + T(2.0) * cam[7] * x * y;
  pixel[0] = cam[0] * (x * radial + dx) + cam[2];
  pixel[1] = cam[1] * (y * radial + dy) + cam[3];
  return true;
}

double huber_rho(double s, double delta) { return s <= delta ? s * s : 2.0 * delta * s - delta * delta; }

}  // namespace

BundleProblem::BundleProblem(int num_cameras, int num_poses, std::vector<Observation> observations)
    : num_cameras_(num_cameras), num_poses_(num_poses), observations_(std::move(observations)) {
  if (num_cameras < 1 || num_poses < 0) fail(ErrorCode::InvalidArgument, "bundle problem needs cameras");
  num_parameters_ = 9 + (num_cameras - 1) * kCameraBlock + num_poses * kPoseBlock;
  for (const auto& o : observations_)
    if (o.camera < 0 || o.camera >= num_cameras || o.pose < 0 || o.pose >= num_poses)
      fail(ErrorCode::InvalidArgument, "observation refers to an unknown camera or pose");
}

int BundleProblem::camera_offset(int camera) const { return camera == 0 ? 0 : 9 + (camera - 1) * kCameraBlock; }

int BundleProblem::pose_offset(int pose) const {
  return 9 + (num_cameras_ - 1) * kCameraBlock + pose * kPoseBlock;
}

void BundleProblem::local_indices(const Observation& obs, int (&idx)[21]) const {
  const int co = camera_offset(obs.camera);
  for (int i = 0; i < 9; ++i) idx[i] = co + i;
  for (int i = 9; i < 15; ++i) idx[i] = obs.camera == 0 ? -1 : co + i;
  const int po = pose_offset(obs.pose);
  for (int i = 0; i < 6; ++i) idx[15 + i] = po + i;
}

Eigen::VectorXd BundleProblem::pack(const std::vector<CameraIntrinsics>& intrinsics,
                                    const std::vector<CameraExtrinsics>& cameras,
                                    const std::vector<CameraExtrinsics>& poses) const {
  Eigen::VectorXd x(num_parameters_);
  for (int c = 0; c < num_cameras_; ++c) {
    const auto& k = intrinsics[static_cast<std::size_t>(c)];
    const int o = camera_offset(c);
    x.segment<9>(o) << k.fx, k.fy, k.cx, k.cy, k.dist[0], k.dist[1], k.dist[2], k.dist[3], k.dist[4];
    if (c > 0) {
      x.segment<3>(o + 9) = cameras[static_cast<std::size_t>(c)].rotvec;
      x.segment<3>(o + 12) = cameras[static_cast<std::size_t>(c)].tvec;
    }
  }
  for (int p = 0; p < num_poses_; ++p) {
    x.segment<3>(pose_offset(p)) = poses[static_cast<std::size_t>(p)].rotvec;
    x.segment<3>(pose_offset(p) + 3) = poses[static_cast<std::size_t>(p)].tvec;
  }
  return x;
}

void BundleProblem::unpack(const Eigen::VectorXd& x, std::vector<CameraIntrinsics>& intrinsics,
                           std::vector<CameraExtrinsics>& cameras, std::vector<CameraExtrinsics>& poses) const {
  intrinsics.resize(static_cast<std::size_t>(num_cameras_));
  cameras.resize(static_cast<std::size_t>(num_cameras_));
  poses.resize(static_cast<std::size_t>(num_poses_));
  for (int c = 0; c < num_cameras_; ++c) {
    auto& k = intrinsics[static_cast<std::size_t>(c)];
    const int o = camera_offset(c);
    k.fx = x[o];
    k.fy = x[o + 1];
    k.cx = x[o + 2];
    k.cy = x[o + 3];
    for (int i = 0; i < 5; ++i) k.dist[static_cast<std::size_t>(i)] = x[o + 4 + i];
    auto& e = cameras[static_cast<std::size_t>(c)];
    if (c == 0) {
      e = CameraExtrinsics{};
    } else {
      e.rotvec = x.segment<3>(o + 9);
      e.tvec = x.segment<3>(o + 12);
    }
  }
  for (int p = 0; p < num_poses_; ++p) {
    poses[static_cast<std::size_t>(p)].rotvec = x.segment<3>(pose_offset(p));
    poses[static_cast<std::size_t>(p)].tvec = x.segment<3>(pose_offset(p) + 3);
  }
}

Eigen::VectorXd BundleProblem::residuals(const Eigen::VectorXd& x) const {
  Eigen::VectorXd r(2 * static_cast<Eigen::Index>(observations_.size()));
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const auto& obs = observations_[i];
    int idx[21];
    local_indices(obs, idx);
    double local[21];
    for (int k = 0; k < 21; ++k) local[k] = idx[k] >= 0 ? x[idx[k]] : 0.0;
    double px[2];
    if (!predict(local, local + 15, obs.board_point, px)) {
      px[0] = px[1] = std::numeric_limits<double>::infinity();
    }
    r[2 * static_cast<Eigen::Index>(i)] = px[0] - obs.pixel.x();
    r[2 * static_cast<Eigen::Index>(i) + 1] = px[1] - obs.pixel.y();
  }
  return r;
}

Eigen::MatrixXd BundleProblem::jacobian(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * static_cast<Eigen::Index>(observations_.size()), num_parameters_);
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const auto& obs = observations_[i];
    int idx[21];
    local_indices(obs, idx);
    Dual local[21];
    for (int k = 0; k < 21; ++k) local[k] = Dual(idx[k] >= 0 ? x[idx[k]] : 0.0, 21, k);
    Dual px[2];
    predict(local, local + 15, obs.board_point, px);
    for (int k = 0; k < 21; ++k) {
      if (idx[k] < 0) continue;
      jac(2 * static_cast<Eigen::Index>(i), idx[k]) = px[0].derivatives()[k];
      jac(2 * static_cast<Eigen::Index>(i) + 1, idx[k]) = px[1].derivatives()[k];
    }
  }
  return jac;
}

double BundleProblem::normal_equations(const Eigen::VectorXd& x, double delta, Eigen::MatrixXd& hessian,
                                       Eigen::VectorXd& gradient) const {
  hessian = Eigen::MatrixXd::Zero(num_parameters_, num_parameters_);
  gradient = Eigen::VectorXd::Zero(num_parameters_);
  double cost = 0.0;
  for (const auto& obs : observations_) {
    int idx[21];
    local_indices(obs, idx);
    Dual local[21];
    for (int k = 0; k < 21; ++k) local[k] = Dual(idx[k] >= 0 ? x[idx[k]] : 0.0, 21, k);
    Dual px[2];
    if (!predict(local, local + 15, obs.board_point, px)) return std::numeric_limits<double>::infinity();
    const double r0 = px[0].value() - obs.pixel.x();
    const double r1 = px[1].value() - obs.pixel.y();
    const double s = std::hypot(r0, r1);
    const double w = s <= delta ? 1.0 : delta / s;
    cost += huber_rho(s, delta);
    const Derivatives& j0 = px[0].derivatives();
    const Derivatives& j1 = px[1].derivatives();
    for (int a = 0; a < 21; ++a) {
      const int ia = idx[a];
      if (ia < 0) continue;
      gradient[ia] += w * (j0[a] * r0 + j1[a] * r1);
      for (int b = 0; b < 21; ++b) {
        const int ib = idx[b];
        if (ib < 0) continue;
        hessian(ia, ib) += w * (j0[a] * j0[b] + j1[a] * j1[b]);
      }
    }
  }
  return cost;
}

double BundleProblem::robust_cost(const Eigen::VectorXd& x, double delta) const {
  double cost = 0.0;
  for (const auto& obs : observations_) {
    int idx[21];
    local_indices(obs, idx);
    double local[21];
    for (int k = 0; k < 21; ++k) local[k] = idx[k] >= 0 ? x[idx[k]] : 0.0;
    double px[2];
    if (!predict(local, local + 15, obs.board_point, px)) return std::numeric_limits<double>::infinity();
    cost += huber_rho(std::hypot(px[0] - obs.pixel.x(), px[1] - obs.pixel.y()), delta);
  }
  return cost;
}

LevenbergMarquardtSummary solve_bundle(const BundleProblem& problem, Eigen::VectorXd& x,
                                       const LevenbergMarquardtOptions& options) {
  LevenbergMarquardtSummary summary;
  double cost = problem.robust_cost(x, options.huber_delta);
  if (!std::isfinite(cost)) fail(ErrorCode::NoConvergence, "initial estimate places points behind a camera");
  summary.cost_history.push_back(cost);

  double lambda = options.initial_damping;
  Eigen::MatrixXd hessian;
  Eigen::VectorXd gradient;
  bool need_system = true;
  while (summary.iterations < options.max_iterations) {
    if (cost == 0.0) {
      summary.converged = true;
      break;
    }
    if (need_system) {
      problem.normal_equations(x, options.huber_delta, hessian, gradient);
      need_system = false;
    }
    ++summary.iterations;
    Eigen::MatrixXd damped = hessian;
    const double floor = 1e-12 * std::max(1.0, hessian.diagonal().maxCoeff());
    for (Eigen::Index i = 0; i < damped.rows(); ++i) damped(i, i) += lambda * (hessian(i, i) + floor);
    const Eigen::VectorXd step = damped.ldlt().solve(-gradient);
    const Eigen::VectorXd candidate = x + step;
    const double new_cost = step.allFinite() ? problem.robust_cost(candidate, options.huber_delta)
                                             : std::numeric_limits<double>::infinity();
    if (new_cost < cost) {
      const double relative = (cost - new_cost) / cost;
      x = candidate;
      cost = new_cost;
      summary.cost_history.push_back(cost);
      lambda = std::max(lambda / 10.0, 1e-15);
      need_system = true;
      if (relative < options.relative_tolerance) {
        summary.converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e16) {
        // No descent direction left at machine precision.
        summary.converged = true;
        break;
      }
    }
  }
  return summary;
}

}  // namespace mvt
