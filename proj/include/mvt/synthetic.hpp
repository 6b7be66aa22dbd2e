#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mvt/calibration.hpp"
#include "mvt/camera_geometry.hpp"
#include "mvt/sync_trim.hpp"
#include "mvt/trajectory.hpp"
#include "mvt/triangulation.hpp"

namespace mvt {

// x(tau) = start + D (10 tau^3 - 15 tau^4 + 6 tau^5), tau = t / T, sampled at
// fps from t = 0 to t = T inclusive.
Trajectory3D min_jerk_trajectory(const Vec3& displacement, double duration_s, double fps,
                                 const Vec3& start = Vec3::Zero(), int landmark_id = 0);

// Cameras on a horizontal arc of `radius` around `target`, all aimed at it.
// Camera 0 sits at the world origin with identity pose when target is the
// default (0, 0, radius). 1920x1080 sensors, f ~ 1000 px, mild distortion;
// world unit metres (unit_scale 1000).
CameraRig make_rig(int n_cams, double radius, const Vec3& target);
CameraRig make_rig(int n_cams, double radius);

// 21 hand landmarks (hand21 order) in metres, wrist at the origin, fingers
// along +y. openness 1 = open hand with splayed fingers and abducted thumb, 0 = fist.
std::vector<Vec3> synth_hand_pose(double openness);

// The hand pose translated along a minimum-jerk path.
std::vector<Trajectory3D> synth_hand_trajectories(const Vec3& start, const Vec3& displacement, double duration_s,
                                                  double fps, double openness = 1.0);

struct Dropout {
  std::string camera;
  int first_frame = 0;
  int last_frame = 0;
};

struct SyntheticScene {
  CameraRig rig;
  std::vector<Trajectory3D> trajectories;  // sample i is frame i
  double noise_px = 0.0;
  std::uint64_t seed = 0;
  std::vector<Dropout> dropouts;
  std::string schema = "hand21";
};

// Ground-truth projections plus seeded Gaussian pixel noise. Points behind a
// camera or outside its sensor are dropped rather than reported.
std::vector<Detections2D> project_scene(const SyntheticScene& scene);

struct BoardCapture {
  std::vector<CornerObservation> observations;
  std::vector<CameraExtrinsics> board_poses;  // board (metres) -> world
};

// Board poses near the rig target: tilt within +/-30 degrees, distance within
// +/-20 %. Corners are reported only where the board faces the camera and
// the corner lands on the sensor.
BoardCapture synth_board_observations(const CameraRig& rig, const BoardSpec& board, int n_poses, double noise_px,
                                      std::uint64_t seed, const Vec3& target);

struct LedTruth {
  IntensityTrace trace;
  std::vector<std::pair<int, int>> events;
};

// ON spans of (off - on + 1) frames repeated n_trials times with `gap` dark
// frames between them; counts high inside spans, uniform [0, base_noise]
// outside. Throws OverlappingTrials when gap < 1.
LedTruth synth_led_trace(double fps, int on_frame, int off_frame, int n_trials, int gap, int base_noise,
                         std::uint64_t seed = 0, const std::string& camera = "A");

struct FixtureOptions {
  int n_cams = 3;
  double radius = 0.6;
  int n_subjects = 3;
  std::vector<std::string> conditions{"condA", "condB"};
  double fps = 60.0;
  double trial_duration_s = 1.5;
  double noise_px = 0.0;
  double corner_noise_px = 0.0;
  int board_poses = 20;
  std::uint64_t seed = 1;
};

// Writes a complete pipeline fixture: dataset/ (calibration corners,
// per-trial detections and LED traces), config.json, and ground_truth/
// (reference rig and 3D trajectories).
void write_fixture(const std::filesystem::path& dir, const FixtureOptions& options);

}  // namespace mvt
