#include <filesystem>
#include <functional>
#include <string>

#include "doctest.h"
#include "mvt/calibration_file.hpp"
#include "mvt/error.hpp"
#include "mvt/synthetic.hpp"

using namespace mvt;

namespace {

ErrorCode code_of(const std::function<void()>& fn, std::string* message = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  return ErrorCode::Ok;
}

CalibrationResult sample_result() {
  CalibrationResult r;
  r.rig = make_rig(3, 0.7);
  r.rig.cameras[1].intrinsics.dist = {-0.1234567890123, 1e-17, 3.0, -0.0, 2.5e-300};
  r.rms_error_px = 0.123456789012345678;
  return r;
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("calibration file roundtrips every number exactly") {
  const CalibrationResult r = sample_result();
  const std::string text = format_calibration(r);
  const CalibrationResult back = parse_calibration(text);
  CHECK(back.rms_error_px == r.rms_error_px);
  CHECK(back.rig.unit_scale == r.rig.unit_scale);
  REQUIRE(back.rig.size() == r.rig.size());
  for (std::size_t c = 0; c < r.rig.size(); ++c) {
    const auto& a = r.rig.cameras[c];
    const auto& b = back.rig.cameras[c];
    CHECK(a.name == b.name);
    CHECK(a.intrinsics.fx == b.intrinsics.fx);
    CHECK(a.intrinsics.fy == b.intrinsics.fy);
    CHECK(a.intrinsics.cx == b.intrinsics.cx);
    CHECK(a.intrinsics.cy == b.intrinsics.cy);
    CHECK(a.intrinsics.width == b.intrinsics.width);
    CHECK(a.intrinsics.height == b.intrinsics.height);
    for (int k = 0; k < 5; ++k) CHECK(a.intrinsics.dist[k] == b.intrinsics.dist[k]);
    CHECK(a.extrinsics.rotvec == b.extrinsics.rotvec);
    CHECK(a.extrinsics.tvec == b.extrinsics.tvec);
  }
  CHECK(format_calibration(back) == text);
}

TEST_CASE("calibration file layout") {
  const std::string text = format_calibration(sample_result());
  CHECK(text.find("[cam_0]") != std::string::npos);
  CHECK(text.find("[cam_2]") != std::string::npos);
  CHECK(text.find("[metadata]") != std::string::npos);
  CHECK(text.find("name = \"A\"") != std::string::npos);
  CHECK(text.find("size = [ 1920, 1080 ]") != std::string::npos);
  for (const char* key : {"matrix", "distortions", "rotation", "translation", "rms_error_px", "unit_scale"})
    CHECK(text.find(std::string(key) + " = ") != std::string::npos);
}

TEST_CASE("missing matrix key is a SchemaError naming it") {
  const std::string text = format_calibration(sample_result());
  const auto start = text.find("[cam_1]");
  const auto key = text.find("matrix", start);
  const auto end = text.find("distortions", key);
  std::string broken = text.substr(0, key) + text.substr(end);
  std::string msg;
  CHECK(code_of([&] { parse_calibration(broken); }, &msg) == ErrorCode::SchemaError);
  CHECK(msg.find("cam_1.matrix") != std::string::npos);
}

TEST_CASE("four distortion coefficients are rejected") {
  CalibrationResult r = sample_result();
  r.rig.cameras[0].intrinsics.dist = {0.1, 0.2, 0.3, 0.4, 0.5};
  const std::string text = format_calibration(r);
  const std::string broken = replace_once(text, "distortions = [ 0.1, 0.2, 0.3, 0.4, 0.5 ]", "distortions = [ 0.1, 0.2, 0.3, 0.4 ]");
  std::string msg;
  CHECK(code_of([&] { parse_calibration(broken); }, &msg) == ErrorCode::SchemaError);
  CHECK(msg.find("cam_0.distortions") != std::string::npos);
}

TEST_CASE("syntax errors carry a line number") {
  const std::string text = "[cam_0]\nname = \"A\"\nsize = [ 1920, 1080\n";
  std::string msg;
  CHECK(code_of([&] { parse_calibration(text, "x.toml"); }, &msg) == ErrorCode::ParseError);
  CHECK(msg.find("x.toml:") != std::string::npos);

  std::string msg2;
  CHECK(code_of([&] { parse_calibration("[cam_0]\nname = \"A\"\nfx == 3\n", "y.toml"); }, &msg2) == ErrorCode::ParseError);
  CHECK(msg2.find("y.toml:3") != std::string::npos);
}

TEST_CASE("comments and blank lines are accepted") {
  std::string text = "# written by hand\n\n" + format_calibration(sample_result());
  text = replace_once(text, "[metadata]", "[metadata]  # trailing comment");
  CHECK_NOTHROW(parse_calibration(text));
}

TEST_CASE("calibration files on disk") {
  const auto dir = std::filesystem::temp_directory_path() / "mvt_calfile_test";
  std::filesystem::remove_all(dir);
  const CalibrationResult r = sample_result();
  write_calibration(r, dir / "calibration" / "calibration.toml");
  const CameraRig rig = read_calibration(dir / "calibration" / "calibration.toml");
  CHECK(rig.size() == 3);
  CHECK(read_calibration_result(dir / "calibration" / "calibration.toml").rms_error_px == r.rms_error_px);
  CHECK(code_of([&] { read_calibration(dir / "nope.toml"); }) == ErrorCode::IoError);
  std::filesystem::remove_all(dir);
}
