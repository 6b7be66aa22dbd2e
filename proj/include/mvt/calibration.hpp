#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvt/camera_geometry.hpp"

namespace mvt {

// Planar ChArUco-style board. Interior corners are numbered row-major,
// corner id k sits at ((k % (squares_x-1)) + 1, (k / (squares_x-1)) + 1)
// squares from the board origin, in the z = 0 plane.
struct BoardSpec {
  int squares_x = 10;
  int squares_y = 7;
  double square_length_mm = 25.0;
  double marker_length_mm = 18.75;

  void validate() const;
  int corner_count() const { return (squares_x - 1) * (squares_y - 1); }
  Vec3 corner_position(int corner_id) const;
};

struct CornerObservation {
  std::string camera;
  int frame = 0;
  int corner_id = 0;
  Vec2 pixel = Vec2::Zero();
};

struct CalibrationResult {
  CameraRig rig;
  double rms_error_px = 0.0;
  std::vector<double> per_camera_error_px;
  int iterations = 0;
  // Robust objective after each accepted Levenberg-Marquardt step, starting
  // with the initial value.
  std::vector<double> cost_history;
};

struct CalibrationOptions {
  std::map<std::string, std::pair<int, int>> image_sizes;  // camera -> (width, height)
  std::pair<int, int> default_image_size{1920, 1080};
  double huber_delta_px = 2.0;
  double initial_damping = 1e-3;
  int max_iterations = 200;
  double relative_tolerance = 1e-10;
  // Hitting the iteration cap with an RMS above this value is NoConvergence.
  double max_rms_px = 5.0;
  int min_corners_per_frame = 4;
  int min_frames_per_camera = 3;
};

// Normalized DLT homography mapping board-plane (x, y) to pixels, h33 = 1.
// Throws DegenerateConfiguration for fewer than 4 or collinear points.
Mat3 estimate_homography(std::span<const Vec2> board_pts, std::span<const Vec2> image_pts);

// Closed-form intrinsics from >= 3 board homographies (distortion zeroed).
// The image size conditions the linear system and fills width/height.
CameraIntrinsics zhang_intrinsics_init(std::span<const Mat3> homographies, int width, int height);

// Board-to-camera pose from a homography and known intrinsics.
CameraExtrinsics pose_from_homography(const Mat3& camera_matrix, const Mat3& homography);

CalibrationResult calibrate_rig(const BoardSpec& board, std::span<const CornerObservation> observations,
                                const CalibrationOptions& options = {});

// Corner CSV: camera,frame,corner_id,x_px,y_px
std::vector<CornerObservation> read_corner_csv(const std::filesystem::path& path);
std::string format_corner_csv(std::span<const CornerObservation> observations);

}  // namespace mvt
