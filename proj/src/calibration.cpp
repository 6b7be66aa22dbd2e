#include "mvt/calibration.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <sstream>

#include "mvt/bundle_adjustment.hpp"
#include "mvt/error.hpp"
#include "mvt/io.hpp"

namespace mvt {

void BoardSpec::validate() const {
  if (squares_x < 3 || squares_y < 3) fail(ErrorCode::InvalidArgument, "board needs at least 3x3 squares");
  if (!(square_length_mm > 0.0)) fail(ErrorCode::InvalidArgument, "square length must be positive");
  if (!(marker_length_mm > 0.0) || marker_length_mm > square_length_mm)
    fail(ErrorCode::InvalidArgument, "marker length must be in (0, square length]");
}

Vec3 BoardSpec::corner_position(int corner_id) const {
  if (corner_id < 0 || corner_id >= corner_count())
    fail(ErrorCode::InvalidArgument, "corner id " + std::to_string(corner_id) + " outside the board");
  const int cols = squares_x - 1;
  return {(corner_id % cols + 1) * square_length_mm, (corner_id / cols + 1) * square_length_mm, 0.0};
}

namespace {

// Similarity taking points to zero centroid and mean distance sqrt(2).
Mat3 hartley_normalization(std::span<const Vec2> pts) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
  Mat3 t;
  t << s, 0.0, -s * centroid.x(), 0.0, s, -s * centroid.y(), 0.0, 0.0, 1.0;
  return t;
}

bool collinear(std::span<const Vec2> pts) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) scatter += (p - centroid) * (p - centroid).transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(scatter);
  const double hi = es.eigenvalues()[1];
  return !(hi > 0.0) || es.eigenvalues()[0] <= 1e-18 * hi;
}

Eigen::Matrix<double, 1, 6> conic_row(const Mat3& h, int i, int j) {
  Eigen::Matrix<double, 1, 6> v;
  v << h(0, i) * h(0, j), h(0, i) * h(1, j) + h(1, i) * h(0, j), h(1, i) * h(1, j),
      h(2, i) * h(0, j) + h(0, i) * h(2, j), h(2, i) * h(1, j) + h(1, i) * h(2, j), h(2, i) * h(2, j);
  return v;
}

struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

Pose to_pose(const CameraExtrinsics& e) { return {e.rotation(), e.tvec}; }
CameraExtrinsics to_extrinsics(const Pose& p) { return {rotation_to_rotvec(p.rotation), p.translation}; }

// Rotation average via the dominant eigenvector of sum(q q^T).
Mat3 average_rotation(const std::vector<Mat3>& rotations) {
  Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
  for (const auto& r : rotations) {
    const Eigen::Quaterniond q(r);
    const Eigen::Vector4d v(q.w(), q.x(), q.y(), q.z());
    acc += v * v.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(acc);
  const Eigen::Vector4d v = es.eigenvectors().col(3);
  return Eigen::Quaterniond(v[0], v[1], v[2], v[3]).normalized().toRotationMatrix();
}

}  // namespace

Mat3 estimate_homography(std::span<const Vec2> board_pts, std::span<const Vec2> image_pts) {
  if (board_pts.size() != image_pts.size()) fail(ErrorCode::InvalidArgument, "correspondence count mismatch");
  if (board_pts.size() < 4) fail(ErrorCode::DegenerateConfiguration, "homography needs at least 4 points");
  if (collinear(board_pts) || collinear(image_pts))
    fail(ErrorCode::DegenerateConfiguration, "homography points are collinear");

  const Mat3 tb = hartley_normalization(board_pts);
  const Mat3 ti = hartley_normalization(image_pts);
  const auto n = static_cast<Eigen::Index>(board_pts.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 b = tb * board_pts[static_cast<std::size_t>(i)].homogeneous();
    const Vec3 m = ti * image_pts[static_cast<std::size_t>(i)].homogeneous();
    const double u = m.x() / m.z();
    const double v = m.y() / m.z();
    a.row(2 * i) << -b.x(), -b.y(), -b.z(), 0.0, 0.0, 0.0, u * b.x(), u * b.y(), u * b.z();
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, -b.x(), -b.y(), -b.z(), v * b.x(), v * b.y(), v * b.z();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  Mat3 out = ti.inverse() * hn * tb;
  if (std::abs(out(2, 2)) < 1e-300) fail(ErrorCode::DegenerateConfiguration, "homography maps origin to infinity");
  return out / out(2, 2);
}

CameraIntrinsics zhang_intrinsics_init(std::span<const Mat3> homographies, int width, int height) {
  if (homographies.size() < 3)
    fail(ErrorCode::InsufficientViews, "intrinsics need at least 3 board views, got " +
                                           std::to_string(homographies.size()));
  if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "image size must be positive");

  // Condition the system by moving pixels to a centred unit scale.
  const double scale = 0.5 * (width + height);
  Mat3 norm;
  norm << 1.0 / scale, 0.0, -0.5 * width / scale, 0.0, 1.0 / scale, -0.5 * height / scale, 0.0, 0.0, 1.0;

  const auto n = static_cast<Eigen::Index>(homographies.size());
  Eigen::MatrixXd v(2 * n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    Mat3 h = norm * homographies[static_cast<std::size_t>(i)];
    h /= h.norm();
    v.row(2 * i) = conic_row(h, 0, 1);
    v.row(2 * i + 1) = conic_row(h, 0, 0) - conic_row(h, 1, 1);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(v, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (!(sv[4] > 1e-9 * sv[0])) fail(ErrorCode::RankDeficient, "board views do not constrain the intrinsics");
  Eigen::VectorXd b = svd.matrixV().col(5);
  if (b[0] < 0.0) b = -b;
  const double b11 = b[0], b12 = b[1], b22 = b[2], b13 = b[3], b23 = b[4], b33 = b[5];
  const double den = b11 * b22 - b12 * b12;
  if (!(den > 0.0) || !(b11 > 0.0)) fail(ErrorCode::RankDeficient, "image of the absolute conic is not definite");
  const double v0 = (b12 * b13 - b11 * b23) / den;
  const double lambda = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11;
  if (!(lambda / b11 > 0.0)) fail(ErrorCode::RankDeficient, "degenerate focal length estimate");
  const double alpha = std::sqrt(lambda / b11);
  const double beta = std::sqrt(lambda * b11 / den);
  const double gamma = -b12 * alpha * alpha * beta / lambda;
  const double u0 = gamma * v0 / beta - b13 * alpha * alpha / lambda;

  CameraIntrinsics k;
  k.fx = alpha * scale;
  k.fy = beta * scale;
  k.cx = u0 * scale + 0.5 * width;
  k.cy = v0 * scale + 0.5 * height;
  k.width = width;
  k.height = height;
  if (!std::isfinite(k.fx) || !std::isfinite(k.fy))
    fail(ErrorCode::RankDeficient, "non-finite focal length estimate");
  k.cx = std::clamp(k.cx, 0.0, std::nextafter(static_cast<double>(width), 0.0));
  k.cy = std::clamp(k.cy, 0.0, std::nextafter(static_cast<double>(height), 0.0));
  return k;
}

CameraExtrinsics pose_from_homography(const Mat3& camera_matrix, const Mat3& homography) {
  const Mat3 m = camera_matrix.inverse() * homography;
  double lambda = 2.0 / (m.col(0).norm() + m.col(1).norm());
  if (m(2, 2) * lambda < 0.0) lambda = -lambda;
  const Vec3 r1 = lambda * m.col(0);
  const Vec3 r2 = lambda * m.col(1);
  Mat3 r;
  r.col(0) = r1;
  r.col(1) = r2;
  r.col(2) = r1.cross(r2);
  const Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 rot = svd.matrixU() * svd.matrixV().transpose();
  if (rot.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) = -u.col(2);
    rot = u * svd.matrixV().transpose();
  }
  return {rotation_to_rotvec(rot), lambda * m.col(2)};
}

CalibrationResult calibrate_rig(const BoardSpec& board, std::span<const CornerObservation> observations,
                                const CalibrationOptions& options) {
  board.validate();
  if (observations.empty()) fail(ErrorCode::EmptyInput, "no corner observations");

  // Cameras in sorted name order; camera 0 is the reference frame.
  std::set<std::string> camera_set;
  std::set<int> frame_set;
  for (const auto& o : observations) {
    camera_set.insert(o.camera);
    frame_set.insert(o.frame);
    board.corner_position(o.corner_id);
  }
  const std::vector<std::string> cameras(camera_set.begin(), camera_set.end());
  const std::vector<int> frames(frame_set.begin(), frame_set.end());
  const auto ncam = cameras.size();
  const auto nframe = frames.size();
  auto cam_index = [&](const std::string& name) {
    return static_cast<std::size_t>(std::lower_bound(cameras.begin(), cameras.end(), name) - cameras.begin());
  };
  auto frame_index = [&](int f) {
    return static_cast<std::size_t>(std::lower_bound(frames.begin(), frames.end(), f) - frames.begin());
  };

  // views[c][f] lists observation indices.
  std::vector<std::vector<std::vector<std::size_t>>> views(ncam, std::vector<std::vector<std::size_t>>(nframe));
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& o = observations[i];
    auto& bucket = views[cam_index(o.camera)][frame_index(o.frame)];
    for (std::size_t j : bucket)
      if (observations[j].corner_id == o.corner_id)
        fail(ErrorCode::InvalidArgument, "duplicate observation of corner " + std::to_string(o.corner_id) +
                                             " in camera " + o.camera + " frame " + std::to_string(o.frame));
    bucket.push_back(i);
  }

  // Per-camera homographies and intrinsics.
  std::vector<std::vector<std::optional<Mat3>>> homographies(ncam, std::vector<std::optional<Mat3>>(nframe));
  std::vector<CameraIntrinsics> intrinsics(ncam);
  for (std::size_t c = 0; c < ncam; ++c) {
    std::vector<Mat3> usable;
    for (std::size_t f = 0; f < nframe; ++f) {
      const auto& ids = views[c][f];
      if (static_cast<int>(ids.size()) < options.min_corners_per_frame) continue;
      std::vector<Vec2> bp, ip;
      for (std::size_t j : ids) {
        bp.push_back(board.corner_position(observations[j].corner_id).head<2>());
        ip.push_back(observations[j].pixel);
      }
      try {
        homographies[c][f] = estimate_homography(bp, ip);
        usable.push_back(*homographies[c][f]);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateConfiguration) throw;
      }
    }
    if (static_cast<int>(usable.size()) < options.min_frames_per_camera)
      fail(ErrorCode::InsufficientViews, "camera " + cameras[c] + " has " + std::to_string(usable.size()) +
                                             " usable board views, need " +
                                             std::to_string(options.min_frames_per_camera));
    auto size = options.default_image_size;
    if (auto it = options.image_sizes.find(cameras[c]); it != options.image_sizes.end()) size = it->second;
    intrinsics[c] = zhang_intrinsics_init(usable, size.first, size.second);
  }

  // Board poses seen from each camera.
  std::vector<std::vector<std::optional<Pose>>> board_in_cam(ncam, std::vector<std::optional<Pose>>(nframe));
  for (std::size_t c = 0; c < ncam; ++c)
    for (std::size_t f = 0; f < nframe; ++f)
      if (homographies[c][f]) board_in_cam[c][f] = to_pose(pose_from_homography(intrinsics[c].matrix(), *homographies[c][f]));

  // Co-visibility counts and a maximum spanning tree rooted at camera 0.
  std::vector<std::vector<int>> shared(ncam, std::vector<int>(ncam, 0));
  for (std::size_t f = 0; f < nframe; ++f)
    for (std::size_t a = 0; a < ncam; ++a)
      for (std::size_t b = a + 1; b < ncam; ++b)
        if (board_in_cam[a][f] && board_in_cam[b][f]) {
          ++shared[a][b];
          ++shared[b][a];
        }

  std::vector<std::optional<Pose>> cam_pose(ncam);  // world (camera 0) -> camera
  cam_pose[0] = Pose{};
  for (std::size_t added = 1; added < ncam; ++added) {
    int best = 0;
    std::size_t from = 0, to = 0;
    for (std::size_t a = 0; a < ncam; ++a) {
      if (!cam_pose[a]) continue;
      for (std::size_t b = 0; b < ncam; ++b)
        if (!cam_pose[b] && shared[a][b] > best) {
          best = shared[a][b];
          from = a;
          to = b;
        }
    }
    if (best == 0) {
      std::string missing;
      for (std::size_t b = 0; b < ncam; ++b)
        if (!cam_pose[b]) missing += (missing.empty() ? "" : ",") + cameras[b];
      fail(ErrorCode::DisconnectedRig, "cameras {" + missing + "} never share a board view with camera " + cameras[0]);
    }
    // Relative pose from -> to, averaged over shared frames.
    std::vector<Mat3> rotations;
    Vec3 t_sum = Vec3::Zero();
    for (std::size_t f = 0; f < nframe; ++f) {
      if (!board_in_cam[from][f] || !board_in_cam[to][f]) continue;
      const Pose& pa = *board_in_cam[from][f];
      const Pose& pb = *board_in_cam[to][f];
      const Mat3 r_ab = pb.rotation * pa.rotation.transpose();
      rotations.push_back(r_ab);
      t_sum += pb.translation - r_ab * pa.translation;
    }
    Pose rel{average_rotation(rotations), t_sum / static_cast<double>(rotations.size())};
    const Pose& base = *cam_pose[from];
    cam_pose[to] = Pose{rel.rotation * base.rotation, rel.rotation * base.translation + rel.translation};
  }

  // Board poses in world from the lowest-index camera that saw each frame.
  std::vector<std::optional<Pose>> board_world(nframe);
  for (std::size_t f = 0; f < nframe; ++f)
    for (std::size_t c = 0; c < ncam && !board_world[f]; ++c)
      if (board_in_cam[c][f]) {
        const Pose& cb = *board_in_cam[c][f];
        const Pose& cw = *cam_pose[c];
        board_world[f] = Pose{cw.rotation.transpose() * cb.rotation,
                              cw.rotation.transpose() * (cb.translation - cw.translation)};
      }

  std::vector<int> pose_slot(nframe, -1);
  std::vector<CameraExtrinsics> poses;
  for (std::size_t f = 0; f < nframe; ++f)
    if (board_world[f]) {
      pose_slot[f] = static_cast<int>(poses.size());
      poses.push_back(to_extrinsics(*board_world[f]));
    }

  std::vector<BundleProblem::Observation> ba_obs;
  std::vector<std::size_t> ba_camera;
  for (std::size_t c = 0; c < ncam; ++c)
    for (std::size_t f = 0; f < nframe; ++f) {
      if (pose_slot[f] < 0) continue;
      for (std::size_t j : views[c][f]) {
        const auto& o = observations[j];
        ba_obs.push_back({static_cast<int>(c), pose_slot[f], board.corner_position(o.corner_id), o.pixel});
        ba_camera.push_back(c);
      }
    }

  std::vector<CameraExtrinsics> extrinsics(ncam);
  for (std::size_t c = 0; c < ncam; ++c) extrinsics[c] = to_extrinsics(*cam_pose[c]);
  extrinsics[0] = CameraExtrinsics{};

  const BundleProblem problem(static_cast<int>(ncam), static_cast<int>(poses.size()), std::move(ba_obs));
  Eigen::VectorXd params = problem.pack(intrinsics, extrinsics, poses);
  LevenbergMarquardtOptions lm;
  lm.huber_delta = options.huber_delta_px;
  lm.initial_damping = options.initial_damping;
  lm.max_iterations = options.max_iterations;
  lm.relative_tolerance = options.relative_tolerance;
  const auto summary = solve_bundle(problem, params, lm);

  std::vector<CameraIntrinsics> k_out;
  std::vector<CameraExtrinsics> e_out, p_out;
  problem.unpack(params, k_out, e_out, p_out);

  const Eigen::VectorXd r = problem.residuals(params);
  std::vector<double> sq(ncam, 0.0);
  std::vector<std::size_t> count(ncam, 0);
  double total = 0.0;
  for (std::size_t i = 0; i < ba_camera.size(); ++i) {
    const double s2 = r.segment<2>(2 * static_cast<Eigen::Index>(i)).squaredNorm();
    sq[ba_camera[i]] += s2;
    ++count[ba_camera[i]];
    total += s2;
  }

  CalibrationResult result;
  result.rms_error_px = std::sqrt(total / static_cast<double>(ba_camera.size()));
  for (std::size_t c = 0; c < ncam; ++c)
    result.per_camera_error_px.push_back(count[c] ? std::sqrt(sq[c] / static_cast<double>(count[c])) : 0.0);
  result.iterations = summary.iterations;
  result.cost_history = summary.cost_history;
  if (!summary.converged && !(result.rms_error_px <= options.max_rms_px)) {
    std::ostringstream msg;
    msg << "bundle adjustment hit " << options.max_iterations << " iterations with RMS " << result.rms_error_px
        << " px";
    fail(ErrorCode::NoConvergence, msg.str());
  }
  if (!std::isfinite(result.rms_error_px)) fail(ErrorCode::NoConvergence, "calibration diverged");

  result.rig.unit_scale = 1.0;  // board lengths are millimetres
  for (std::size_t c = 0; c < ncam; ++c) {
    Camera cam;
    cam.name = cameras[c];
    cam.intrinsics = k_out[c];
    cam.intrinsics.width = intrinsics[c].width;
    cam.intrinsics.height = intrinsics[c].height;
    cam.extrinsics = e_out[c];
    result.rig.cameras.push_back(std::move(cam));
  }
  return result;
}

std::vector<CornerObservation> read_corner_csv(const std::filesystem::path& path) {
  const auto table = io::read_csv(path, {"camera", "frame", "corner_id", "x_px", "y_px"});
  const auto ic = table.column("camera"), iframe = table.column("frame"), iid = table.column("corner_id"),
             ix = table.column("x_px"), iy = table.column("y_px");
  std::vector<CornerObservation> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      out.push_back({row[ic], static_cast<int>(io::parse_int(row[iframe])), static_cast<int>(io::parse_int(row[iid])),
                     Vec2(io::parse_double(row[ix]), io::parse_double(row[iy]))});
    } catch (const Error& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(table.line_numbers[r]) + ": " + e.what());
    }
  }
  return out;
}

std::string format_corner_csv(std::span<const CornerObservation> observations) {
  std::string out = "camera,frame,corner_id,x_px,y_px\n";
  for (const auto& o : observations)
    out += o.camera + "," + std::to_string(o.frame) + "," + std::to_string(o.corner_id) + "," +
           io::format_double(o.pixel.x()) + "," + io::format_double(o.pixel.y()) + "\n";
  return out;
}

}  // namespace mvt
