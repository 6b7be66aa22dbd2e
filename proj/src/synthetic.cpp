#include "mvt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "json.hpp"
#include "mvt/calibration_file.hpp"
#include "mvt/error.hpp"
#include "mvt/io.hpp"
#include "mvt/pipeline.hpp"

namespace mvt {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Mat3 look_at(const Vec3& eye, const Vec3& target) {
  // Image y points down, which is world +y.
  const Vec3 z = (target - eye).normalized();
  const Vec3 x = Vec3::UnitY().cross(z).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return r;
}

Mat3 euler_xyz(double ax, double ay, double az) {
  return (Eigen::AngleAxisd(az, Vec3::UnitZ()) * Eigen::AngleAxisd(ay, Vec3::UnitY()) *
          Eigen::AngleAxisd(ax, Vec3::UnitX()))
      .toRotationMatrix();
}

bool on_sensor(const CameraIntrinsics& intr, const Vec2& px) {
  return px.x() >= 0.0 && px.y() >= 0.0 && px.x() <= intr.width - 1 && px.y() <= intr.height - 1;
}

std::string camera_letter(int k) { return std::string(1, static_cast<char>('A' + k)); }

}  // namespace

Trajectory3D min_jerk_trajectory(const Vec3& displacement, double duration_s, double fps, const Vec3& start,
                                 int landmark_id) {
  if (!(duration_s > 0.0) || !(fps > 0.0)) fail(ErrorCode::InvalidArgument, "duration and fps must be positive");
  Trajectory3D traj;
  traj.landmark_id = landmark_id;
  traj.source_fps = fps;
  const int n = static_cast<int>(std::lround(duration_s * fps));
  for (int i = 0; i <= n; ++i) {
    const double t = i / fps;
    const double tau = std::clamp(t / duration_s, 0.0, 1.0);
    const double s = tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
    traj.t.push_back(t);
    traj.p.emplace_back(start + s * displacement);
  }
  return traj;
}

CameraRig make_rig(int n_cams, double radius, const Vec3& target) {
  if (n_cams < 2 || n_cams > 5) fail(ErrorCode::InvalidArgument, "synthetic rig supports 2 to 5 cameras");
  if (!(radius > 0.0)) fail(ErrorCode::InvalidArgument, "radius must be positive");
  CameraRig rig;
  rig.unit_scale = 1000.0;
  for (int k = 0; k < n_cams; ++k) {
    const int step = (k + 1) / 2;
    const double phi = (k % 2 == 1 ? 1.0 : -1.0) * 35.0 * kDeg * step;
    Vec3 eye = target + radius * Vec3(std::sin(phi), 0.0, -std::cos(phi));
    if (k > 0) eye.y() += (k % 2 == 1) ? -0.08 : 0.05;

    Camera cam;
    cam.name = camera_letter(k);
    auto& in = cam.intrinsics;
    in.width = 1920;
    in.height = 1080;
    in.fx = 1000.0 + 15.0 * k;
    in.fy = in.fx * 1.001;
    in.cx = 960.0 + 4.0 * k;
    in.cy = 540.0 - 3.0 * k;
    in.dist = {-0.03 + 0.005 * k, 0.01, 0.0005, -0.0003, 0.0};
    const Mat3 r = look_at(eye, target);
    cam.extrinsics.rotvec = rotation_to_rotvec(r);
    cam.extrinsics.tvec = -r * eye;
    rig.cameras.push_back(cam);
  }
  return rig;
}

CameraRig make_rig(int n_cams, double radius) { return make_rig(n_cams, radius, Vec3(0.0, 0.0, radius)); }

std::vector<Vec3> synth_hand_pose(double openness) {
  openness = std::clamp(openness, 0.0, 1.0);
  std::vector<Vec3> pts(21, Vec3::Zero());

  // Thumb: CMC, MCP, IP, tip. Open = abducted and out of the palm plane,
  // closed = folded across the palm.
  const Vec3 thumb_base(0.022, 0.025, -0.010);
  const Vec3 open_dir = Vec3(0.75, 0.55, -0.35).normalized();
  const Vec3 fist_dir = Vec3(-0.45, 0.45, -0.75).normalized();
  const Vec3 thumb_dir = (openness * open_dir + (1.0 - openness) * fist_dir).normalized();
  const double thumb_len[3] = {0.035, 0.030, 0.025};
  pts[1] = thumb_base;
  for (int j = 0; j < 3; ++j) {
    const double bend = (1.0 - openness) * 0.35 * j;
    const Vec3 dir = (thumb_dir + Vec3(-bend, 0.0, -bend)).normalized();
    pts[2 + j] = pts[1 + j] + thumb_len[j] * dir;
  }

  // Open hands splay the fingers, arch the knuckle line and keep a slight
  // resting flexion; a flat hand would enclose almost no volume.
  struct Finger {
    Vec3 base;
    double len[3];
    double splay;
    double arch;
  };
  const Finger fingers[4] = {
      {{0.025, 0.080, 0.000}, {0.040, 0.025, 0.020}, 1.5, -0.6},
      {{0.005, 0.085, 0.003}, {0.045, 0.028, 0.022}, 0.5, 0.0},
      {{-0.015, 0.080, 0.002}, {0.042, 0.026, 0.021}, -0.5, -0.5},
      {{-0.033, 0.072, -0.002}, {0.032, 0.020, 0.018}, -1.5, -1.3},
  };
  const double flex = ((1.0 - openness) * 90.0 + openness * 10.0) * kDeg;
  const double joint_gain[3] = {1.0, 1.1, 0.7};
  for (int f = 0; f < 4; ++f) {
    const int base = 5 + 4 * f;
    pts[base] = fingers[f].base + Vec3(0.0, 0.0, openness * 0.015 * fingers[f].arch);
    const double yaw = openness * 12.0 * fingers[f].splay * kDeg;
    double phi = 0.0;
    for (int j = 0; j < 3; ++j) {
      phi += flex * joint_gain[j];
      // Flexion curls toward the palm side (-z).
      const Vec3 dir(std::sin(yaw) * std::cos(phi), std::cos(yaw) * std::cos(phi), -std::sin(phi));
      pts[base + j + 1] = pts[base + j] + fingers[f].len[j] * dir;
    }
  }
  return pts;
}

std::vector<Trajectory3D> synth_hand_trajectories(const Vec3& start, const Vec3& displacement, double duration_s,
                                                  double fps, double openness) {
  const auto pose = synth_hand_pose(openness);
  std::vector<Trajectory3D> out;
  for (int id = 0; id < static_cast<int>(pose.size()); ++id)
    out.push_back(min_jerk_trajectory(displacement, duration_s, fps, start + pose[id], id));
  return out;
}

std::vector<Detections2D> project_scene(const SyntheticScene& scene) {
  scene.rig.validate();
  std::mt19937_64 rng(scene.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::size_t n_frames = 0;
  for (const auto& tr : scene.trajectories) n_frames = std::max(n_frames, tr.size());

  std::vector<Detections2D> out;
  for (const auto& cam : scene.rig.cameras) {
    Detections2D det;
    det.camera = cam.name;
    det.landmark_schema = scene.schema;
    for (std::size_t f = 0; f < n_frames; ++f) {
      const int frame = static_cast<int>(f);
      const bool dropped = std::any_of(scene.dropouts.begin(), scene.dropouts.end(), [&](const Dropout& d) {
        return d.camera == cam.name && frame >= d.first_frame && frame <= d.last_frame;
      });
      for (const auto& tr : scene.trajectories) {
        if (f >= tr.size() || !tr.p[f]) continue;
        // Draw noise unconditionally so dropouts do not shift later samples.
        const Vec2 n(noise(rng), noise(rng));
        if (dropped || camera_depth(cam.extrinsics, *tr.p[f]) <= 0.0) continue;
        const Vec2 px = project_point(cam, *tr.p[f]) + scene.noise_px * n;
        if (!on_sensor(cam.intrinsics, px)) continue;
        det.rows.push_back({frame, tr.landmark_id, px, 1.0});
      }
    }
    out.push_back(std::move(det));
  }
  return out;
}

BoardCapture synth_board_observations(const CameraRig& rig, const BoardSpec& board, int n_poses, double noise_px,
                                      std::uint64_t seed, const Vec3& target) {
  board.validate();
  if (n_poses < 1) fail(ErrorCode::InvalidArgument, "n_poses must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  const Vec3 origin = rig.cameras.front().extrinsics.center();
  const Vec3 half(0.5 * board.squares_x * board.square_length_mm / 1000.0,
                  0.5 * board.squares_y * board.square_length_mm / 1000.0, 0.0);
  const double cos_limit = std::cos(75.0 * kDeg);

  BoardCapture cap;
  for (int i = 0; i < n_poses; ++i) {
    const double ax = 30.0 * kDeg * unit(rng);
    const double ay = 30.0 * kDeg * unit(rng);
    const double az = 20.0 * kDeg * unit(rng);
    const double scale = 1.0 + 0.2 * unit(rng);
    Vec3 centre = target + Vec3(0.06 * unit(rng), 0.05 * unit(rng), 0.0);
    centre = origin + scale * (centre - origin);
    const Mat3 r = euler_xyz(ax, ay, az);
    CameraExtrinsics pose;
    pose.rotvec = rotation_to_rotvec(r);
    pose.tvec = centre - r * half;
    cap.board_poses.push_back(pose);

    // The printed side faces -z in board coordinates.
    const Vec3 normal = -(r * Vec3::UnitZ());
    for (const auto& cam : rig.cameras) {
      const Vec3 to_cam = (cam.extrinsics.center() - centre).normalized();
      const bool facing = normal.dot(to_cam) > cos_limit;
      for (int k = 0; k < board.corner_count(); ++k) {
        const Vec2 n(noise(rng), noise(rng));
        if (!facing) continue;
        const Vec3 world = r * (board.corner_position(k) / 1000.0) + pose.tvec;
        if (camera_depth(cam.extrinsics, world) <= 0.0) continue;
        const Vec2 px = project_point(cam, world) + noise_px * n;
        if (!on_sensor(cam.intrinsics, px)) continue;
        cap.observations.push_back({cam.name, i, k, px});
      }
    }
  }
  return cap;
}

LedTruth synth_led_trace(double fps, int on_frame, int off_frame, int n_trials, int gap, int base_noise,
                         std::uint64_t seed, const std::string& camera) {
  if (on_frame < 0 || off_frame < on_frame) fail(ErrorCode::InvalidArgument, "need 0 <= on_frame <= off_frame");
  if (n_trials < 1) fail(ErrorCode::InvalidArgument, "n_trials must be positive");
  if (n_trials > 1 && gap < 1) fail(ErrorCode::OverlappingTrials, "trials need at least one dark frame between them");
  const int span = off_frame - on_frame + 1;
  LedTruth truth;
  for (int k = 0; k < n_trials; ++k) {
    const int on = on_frame + k * (span + gap);
    truth.events.emplace_back(on, on + span - 1);
  }
  const int length = truth.events.back().second + 1 + std::max(on_frame, 1);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> low(0, std::max(base_noise, 0));
  std::uniform_int_distribution<int> high(40, 60);
  truth.trace.camera = camera;
  truth.trace.fps = fps;
  truth.trace.counts.assign(length, 0);
  for (int f = 0; f < length; ++f) {
    const bool lit = std::any_of(truth.events.begin(), truth.events.end(),
                                 [f](const auto& e) { return f >= e.first && f <= e.second; });
    truth.trace.counts[f] = lit ? high(rng) : low(rng);
  }
  return truth;
}

void write_fixture(const std::filesystem::path& dir, const FixtureOptions& options) {
  namespace fs = std::filesystem;
  using nlohmann::ordered_json;
  if (options.n_subjects < 1 || options.conditions.empty())
    fail(ErrorCode::InvalidArgument, "fixture needs subjects and conditions");

  const CameraRig rig = make_rig(options.n_cams, options.radius);
  const Vec3 target(0.0, 0.0, options.radius);
  const fs::path dataset = dir / "dataset";
  const fs::path truth_dir = dir / "ground_truth";

  BoardSpec board;
  const auto capture = synth_board_observations(rig, board, options.board_poses, options.corner_noise_px,
                                                options.seed * 7919 + 1, target);
  io::write_text(dataset / "calibration" / "corners.csv", format_corner_csv(capture.observations));

  CalibrationResult truth_cal;
  truth_cal.rig = rig;
  io::write_text(truth_dir / "calibration.toml", format_calibration(truth_cal));

  // Cameras start recording a few frames apart; the LED marks the trial.
  const int lead_in = 10;
  const int tail = 8;
  ordered_json manifest;
  manifest["fps"] = options.fps;
  manifest["unit"] = "m";
  manifest["trials"] = ordered_json::array();

  std::uint64_t trial_seed = options.seed * 1000003;
  for (int s = 0; s < options.n_subjects; ++s) {
    for (std::size_t c = 0; c < options.conditions.size(); ++c) {
      const std::string rel = "subj" + std::to_string(s + 1) + "/" + options.conditions[c] + "/trial1";
      const double amp = (0.10 + 0.03 * s) * (1.0 + 0.2 * static_cast<double>(c));
      const Vec3 displacement = amp * Vec3(0.8, -0.2, 0.3).normalized();
      const Vec3 start = target + Vec3(-0.06, -0.08, -0.02);
      const double openness = 1.0 - 0.1 * static_cast<double>((s + c) % 3);
      const auto trajs =
          synth_hand_trajectories(start, displacement, options.trial_duration_s, options.fps, openness);
      const int moving = static_cast<int>(trajs.front().size());

      ordered_json entry;
      entry["path"] = rel;
      entry["subject"] = "subj" + std::to_string(s + 1);
      entry["condition"] = options.conditions[c];
      entry["displacement_m"] = {displacement.x(), displacement.y(), displacement.z()};
      entry["duration_s"] = options.trial_duration_s;
      entry["openness"] = openness;
      ordered_json led = ordered_json::object();

      for (int k = 0; k < options.n_cams; ++k) {
        const Camera& cam = rig.cameras[k];
        const int offset = 3 + (2 * k) % 3;
        const int on = lead_in + offset;
        const auto led_truth =
            synth_led_trace(options.fps, on, on + moving - 1, 1, 1, 3, ++trial_seed, cam.name);
        led[cam.name] = {led_truth.events.front().first, led_truth.events.front().second};
        const int frames = static_cast<int>(led_truth.trace.counts.size()) + tail;

        // Hold the start pose before the LED and the end pose after it.
        SyntheticScene scene;
        scene.rig.cameras = {cam};
        scene.rig.unit_scale = rig.unit_scale;
        scene.noise_px = options.noise_px;
        scene.seed = ++trial_seed;
        for (const auto& tr : trajs) {
          Trajectory3D held;
          held.landmark_id = tr.landmark_id;
          held.source_fps = tr.source_fps;
          for (int f = 0; f < frames; ++f) {
            const int i = std::clamp(f - on, 0, moving - 1);
            held.t.push_back(f / options.fps);
            held.p.push_back(tr.p[i]);
          }
          scene.trajectories.push_back(std::move(held));
        }
        const auto det = project_scene(scene).front();
        const std::string stem = "clip-cam" + cam.name;
        io::write_text(dataset / rel / (stem + ".csv"), format_detections_csv(det));
        IntensityTrace trace = led_truth.trace;
        trace.counts.resize(frames, 0);
        io::write_text(dataset / rel / (stem + ".trace.csv"), format_trace_csv(trace));
      }
      entry["led_frames"] = led;
      manifest["trials"].push_back(entry);

      std::vector<Point3DRecord> records;
      for (int f = 0; f < moving; ++f)
        for (const auto& tr : trajs) {
          Point3DRecord r;
          r.frame = f;
          r.landmark_id = tr.landmark_id;
          r.position = *tr.p[f];
          r.n_cams_used = options.n_cams;
          records.push_back(r);
        }
      io::write_text(truth_dir / rel / "points3d.csv", format_points_csv(records));
    }
  }
  io::write_text(truth_dir / "ground_truth.json", manifest.dump(2) + "\n");

  PipelineConfig config;
  config.dataset_root = "dataset";
  config.saving_dir = "output";
  config.fps = options.fps;
  config.body_part = "right_hand";
  io::write_text(dir / "config.json", config.to_json());
}

}  // namespace mvt
