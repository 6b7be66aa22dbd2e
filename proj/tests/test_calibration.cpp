#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>

#include "doctest.h"
#include "mvt/bundle_adjustment.hpp"
#include "mvt/calibration.hpp"
#include "mvt/error.hpp"
#include "mvt/synthetic.hpp"

using namespace mvt;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

std::vector<Vec2> map_points(const Mat3& h, const std::vector<Vec2>& pts) {
  std::vector<Vec2> out;
  for (const auto& p : pts) out.push_back((h * p.homogeneous()).hnormalized());
  return out;
}

struct Scene {
  CameraRig truth;
  BoardCapture capture;
};

Scene board_scene(double noise, std::uint64_t seed = 21) {
  Scene s;
  s.truth = make_rig(3, 0.6);
  s.capture = synth_board_observations(s.truth, BoardSpec{}, 20, noise, seed, Vec3(0, 0, 0.6));
  return s;
}

// Homographies of one camera from its per-frame corner observations.
std::vector<Mat3> homographies_for(const BoardSpec& board, const std::vector<CornerObservation>& obs,
                                   const std::string& camera) {
  std::map<int, std::pair<std::vector<Vec2>, std::vector<Vec2>>> frames;
  for (const auto& o : obs) {
    if (o.camera != camera) continue;
    frames[o.frame].first.push_back(board.corner_position(o.corner_id).head<2>());
    frames[o.frame].second.push_back(o.pixel);
  }
  std::vector<Mat3> hs;
  for (const auto& [f, pts] : frames)
    if (pts.first.size() >= 4) hs.push_back(estimate_homography(pts.first, pts.second));
  return hs;
}

}  // namespace

TEST_CASE("homography of identical squares is identity") {
  const std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Mat3 h = estimate_homography(sq, sq);
  CHECK((h - Mat3::Identity()).norm() < 1e-12);
}

TEST_CASE("homography of a scaled board is diag(2,2,1)") {
  const std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.3}};
  std::vector<Vec2> img;
  for (const auto& p : sq) img.push_back(2.0 * p);
  const Mat3 h = estimate_homography(sq, img);
  CHECK((h - Vec3(2, 2, 1).asDiagonal().toDenseMatrix()).norm() < 1e-12);
}

TEST_CASE("random homography is recovered") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Mat3 h;
    h << 800 + 50 * u(rng), 30 * u(rng), 640 + 40 * u(rng), 30 * u(rng), 800 + 50 * u(rng), 360 + 40 * u(rng),
        0.1 * u(rng), 0.1 * u(rng), 1.0;
    std::vector<Vec2> board;
    for (int i = 0; i < 20; ++i) board.emplace_back(u(rng), u(rng));
    const auto img = map_points(h, board);
    const Mat3 est = estimate_homography(board, img);
    const auto back = map_points(est, board);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK((back[i] - img[i]).norm() < 1e-8);
    CHECK(est(2, 2) == doctest::Approx(1.0));
  }
}

TEST_CASE("homography rejects degenerate input") {
  const std::vector<Vec2> three{{0, 0}, {1, 0}, {0, 1}};
  CHECK(code_of([&] { estimate_homography(three, three); }) == ErrorCode::DegenerateConfiguration);
  const std::vector<Vec2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}};
  CHECK(code_of([&] { estimate_homography(line, line); }) == ErrorCode::DegenerateConfiguration);
}

TEST_CASE("Zhang initialization recovers a known camera") {
  CameraRig rig;
  Camera cam;
  cam.name = "A";
  cam.intrinsics.fx = cam.intrinsics.fy = 900;
  cam.intrinsics.cx = 320;
  cam.intrinsics.cy = 240;
  cam.intrinsics.width = 640;
  cam.intrinsics.height = 480;
  rig.cameras = {cam};
  const BoardSpec board;
  const auto cap = synth_board_observations(rig, board, 10, 0.0, 99, Vec3(0, 0, 0.6));
  const auto hs = homographies_for(board, cap.observations, "A");
  REQUIRE(hs.size() >= 3);
  const CameraIntrinsics in = zhang_intrinsics_init(hs, 640, 480);
  CHECK(std::abs(in.fx / 900.0 - 1.0) < 1e-3);
  CHECK(std::abs(in.fy / 900.0 - 1.0) < 1e-3);
  CHECK(std::abs(in.cx - 320.0) < 2.0);
  CHECK(std::abs(in.cy - 240.0) < 2.0);
  for (double d : in.dist) CHECK(d == 0.0);

  CHECK(code_of([&] { zhang_intrinsics_init(std::span(hs).first(2), 640, 480); }) == ErrorCode::InsufficientViews);
  const std::vector<Mat3> same(5, hs.front());
  CHECK(code_of([&] { zhang_intrinsics_init(same, 640, 480); }) == ErrorCode::RankDeficient);
}

TEST_CASE("noiseless rig calibration recovers the truth") {
  const Scene s = board_scene(0.0);
  CalibrationResult res = calibrate_rig(BoardSpec{}, s.capture.observations);
  CHECK(res.rms_error_px < 1e-4);
  REQUIRE(res.rig.size() == 3);
  CHECK(res.rig.unit_scale == 1.0);
  CHECK(res.rig.cameras[0].extrinsics.rotvec.norm() == 0.0);
  CHECK(res.rig.cameras[0].extrinsics.tvec.norm() == 0.0);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& est = res.rig.cameras[c];
    const auto& tru = s.truth.cameras[c];
    CHECK(est.name == tru.name);
    CHECK(std::abs(est.intrinsics.fx / tru.intrinsics.fx - 1.0) < 5e-3);
    CHECK(std::abs(est.intrinsics.fy / tru.intrinsics.fy - 1.0) < 5e-3);
  }
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b) {
      const double est = (res.rig.cameras[a].extrinsics.center() - res.rig.cameras[b].extrinsics.center()).norm();
      const double tru =
          1000.0 * (s.truth.cameras[a].extrinsics.center() - s.truth.cameras[b].extrinsics.center()).norm();
      CHECK(std::abs(est / tru - 1.0) < 1e-3);
    }
}

TEST_CASE("calibration RMS tracks injected noise") {
  const Scene s = board_scene(0.5);
  const CalibrationResult res = calibrate_rig(BoardSpec{}, s.capture.observations);
  CHECK(res.rms_error_px >= 0.3);
  CHECK(res.rms_error_px <= 0.8);
  CHECK(res.per_camera_error_px.size() == 3);
}

TEST_CASE("accepted LM steps never increase the robust cost") {
  const Scene s = board_scene(0.5, 4);
  const CalibrationResult res = calibrate_rig(BoardSpec{}, s.capture.observations);
  REQUIRE(res.cost_history.size() >= 2);
  for (std::size_t i = 1; i < res.cost_history.size(); ++i) CHECK(res.cost_history[i] <= res.cost_history[i - 1]);
}

TEST_CASE("rescaling the board rescales translations only") {
  const Scene s = board_scene(0.5, 8);
  BoardSpec big;
  big.square_length_mm = 50.0;
  big.marker_length_mm = 37.5;
  const CalibrationResult a = calibrate_rig(BoardSpec{}, s.capture.observations);
  const CalibrationResult b = calibrate_rig(big, s.capture.observations);
  CHECK(std::abs(a.rms_error_px - b.rms_error_px) < 1e-9);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& ea = a.rig.cameras[c].extrinsics;
    const auto& eb = b.rig.cameras[c].extrinsics;
    CHECK((eb.tvec - 2.0 * ea.tvec).norm() <= 1e-6 * std::max(1.0, ea.tvec.norm()));
    CHECK((eb.rotvec - ea.rotvec).norm() < 1e-8);
    CHECK(std::abs(b.rig.cameras[c].intrinsics.fx - a.rig.cameras[c].intrinsics.fx) < 1e-6);
  }
}

TEST_CASE("disconnected camera is rejected") {
  Scene s = board_scene(0.0);
  // Move every camera C observation to frames nobody else saw.
  std::vector<CornerObservation> obs;
  for (auto o : s.capture.observations) {
    if (o.camera == "C") o.frame += 1000;
    obs.push_back(o);
  }
  CHECK(code_of([&] { calibrate_rig(BoardSpec{}, obs); }) == ErrorCode::DisconnectedRig);
}

TEST_CASE("calibration input validation") {
  const Scene s = board_scene(0.0);
  auto obs = s.capture.observations;
  obs.push_back(obs.front());
  CHECK(code_of([&] { calibrate_rig(BoardSpec{}, obs); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { calibrate_rig(BoardSpec{}, std::vector<CornerObservation>{}); }) == ErrorCode::EmptyInput);

  std::vector<CornerObservation> few;
  for (const auto& o : s.capture.observations)
    if (o.camera != "B" || o.frame < 2) few.push_back(o);
  CHECK(code_of([&] { calibrate_rig(BoardSpec{}, few); }) == ErrorCode::InsufficientViews);

  BoardSpec bad;
  bad.marker_length_mm = 30.0;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
  bad = BoardSpec{};
  bad.squares_x = 2;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("board corner layout") {
  const BoardSpec b;
  CHECK(b.corner_count() == 54);
  CHECK((b.corner_position(0) - Vec3(25, 25, 0)).norm() == 0.0);
  CHECK((b.corner_position(9) - Vec3(25, 50, 0)).norm() == 0.0);
  CHECK(code_of([&] { b.corner_position(54); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("bundle Jacobian matches central differences") {
  const CameraRig truth = make_rig(2, 0.6);
  const BoardSpec board;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  std::vector<BundleProblem::Observation> obs;
  std::vector<CameraExtrinsics> poses;
  for (int p = 0; p < 3; ++p) {
    CameraExtrinsics pose;
    pose.rotvec = Vec3(0.3 * u(rng), 0.3 * u(rng), 0.2 * u(rng));
    pose.tvec = Vec3(-120 + 20 * u(rng), -80 + 20 * u(rng), 600 + 30 * u(rng));
    poses.push_back(pose);
    for (int k = 0; k < board.corner_count(); k += 7)
      for (int c = 0; c < 2; ++c) obs.push_back({c, p, board.corner_position(k), Vec2(900 + 10 * u(rng), 500 + 10 * u(rng))});
  }
  const BundleProblem problem(2, 3, obs);
  std::vector<CameraIntrinsics> intr{truth.cameras[0].intrinsics, truth.cameras[1].intrinsics};
  std::vector<CameraExtrinsics> cams{truth.cameras[0].extrinsics, truth.cameras[1].extrinsics};
  cams[1].tvec *= 1000.0;
  const Eigen::VectorXd base = problem.pack(intr, cams, poses);

  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x = base;
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += (std::abs(x[i]) > 1.0 ? 0.01 * std::abs(x[i]) : 0.01) * u(rng);
    const Eigen::MatrixXd j = problem.jacobian(x);
    Eigen::MatrixXd fd(j.rows(), j.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      fd.col(i) = (problem.residuals(xp) - problem.residuals(xm)) / (2.0 * h);
    }
    const double rel = (j - fd).norm() / fd.norm();
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("corner CSV roundtrip and errors") {
  const Scene s = board_scene(0.3);
  const std::string text = format_corner_csv(s.capture.observations);
  const auto dir = std::filesystem::temp_directory_path() / "mvt_corner_csv_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "corners.csv") << text;
  }
  const auto back = read_corner_csv(dir / "corners.csv");
  REQUIRE(back.size() == s.capture.observations.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].camera == s.capture.observations[i].camera);
    CHECK(back[i].corner_id == s.capture.observations[i].corner_id);
    CHECK((back[i].pixel - s.capture.observations[i].pixel).norm() == 0.0);
  }
  {
    std::ofstream(dir / "bad.csv") << "camera,frame,corner_id,x_px\nA,0,0,1\n";
  }
  CHECK(code_of([&] { read_corner_csv(dir / "bad.csv"); }) == ErrorCode::SchemaError);
  {
    std::ofstream(dir / "bad2.csv") << "camera,frame,corner_id,x_px,y_px\nA,0,zero,1,2\n";
  }
  CHECK(code_of([&] { read_corner_csv(dir / "bad2.csv"); }) == ErrorCode::ParseError);
  std::filesystem::remove_all(dir);
}
