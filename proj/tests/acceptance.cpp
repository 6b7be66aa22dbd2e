// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "mvt/bundle_adjustment.hpp"
#include "mvt/calibration.hpp"
#include "mvt/error.hpp"
#include "mvt/features.hpp"
#include "mvt/io.hpp"
#include "mvt/metrics.hpp"
#include "mvt/pipeline.hpp"
#include "mvt/synthetic.hpp"
#include "mvt/sync_trim.hpp"
#include "mvt/triangulation.hpp"

using namespace mvt;
namespace fs = std::filesystem;

namespace {

int failed = 0;

struct Check {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void criterion(int id, const char* name, const std::function<Check()>& body) {
  Check c;
  try {
    c = body();
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = std::string("exception: ") + e.what();
  }
  if (!c.ok) ++failed;
  std::printf("%s %d %s: %s\n", c.ok ? "PASS" : "FAIL", id, name, c.detail.c_str());
  std::fflush(stdout);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

Check closure() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticScene s;
  s.rig = make_rig(3, 0.8);
  s.trajectories = synth_hand_trajectories(Vec3(-0.06, -0.08, 0.78), Vec3(0.12, 0.03, 0.03), 1.0, 60.0);
  double worst = 0.0;
  std::size_t present = 0;
  for (const auto& r : triangulate_trial(s.rig, project_scene(s))) {
    if (!r.position) continue;
    ++present;
    worst = std::max(worst, (*r.position - *s.trajectories[r.landmark_id].p[r.frame]).norm());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(present == 21 * s.trajectories.front().size(), "missing reconstructions");
  c.require(worst < 1e-7, "max error " + fmt("%.3g", worst));
  c.require(secs < 10.0, "runtime " + fmt("%.2f", secs) + " s");
  c.detail = c.ok ? "max error " + fmt("%.2e", worst) + " m over " + std::to_string(present) + " points, " +
                        fmt("%.2f", secs) + " s"
                  : c.detail;
  return c;
}

double jacobian_error() {
  const CameraRig truth = make_rig(3, 0.6);
  const BoardSpec board;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<BundleProblem::Observation> obs;
  std::vector<CameraExtrinsics> poses;
  for (int p = 0; p < 4; ++p) {
    CameraExtrinsics pose;
    pose.rotvec = Vec3(0.3 * u(rng), 0.3 * u(rng), 0.2 * u(rng));
    pose.tvec = Vec3(-120 + 20 * u(rng), -80 + 20 * u(rng), 600 + 30 * u(rng));
    poses.push_back(pose);
    for (int k = 0; k < board.corner_count(); k += 5)
      for (int cam = 0; cam < 3; ++cam)
        obs.push_back({cam, p, board.corner_position(k), Vec2(900 + 10 * u(rng), 500 + 10 * u(rng))});
  }
  const BundleProblem problem(3, 4, obs);
  std::vector<CameraIntrinsics> intr;
  std::vector<CameraExtrinsics> cams;
  for (const auto& cam : truth.cameras) {
    intr.push_back(cam.intrinsics);
    cams.push_back(cam.extrinsics);
    cams.back().tvec *= 1000.0;
  }
  const Eigen::VectorXd x = problem.pack(intr, cams, poses);
  const Eigen::MatrixXd j = problem.jacobian(x);
  Eigen::MatrixXd fd(j.rows(), j.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    fd.col(i) = (problem.residuals(xp) - problem.residuals(xm)) / (2.0 * h);
  }
  return (j - fd).norm() / fd.norm();
}

Check calibration() {
  Check c;
  const CameraRig truth = make_rig(3, 0.6);
  const BoardSpec board;
  const auto clean = synth_board_observations(truth, board, 20, 0.0, 21, Vec3(0, 0, 0.6));
  const auto res = calibrate_rig(board, clean.observations);
  double f_err = 0.0, b_err = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    f_err = std::max(f_err, std::abs(res.rig.cameras[k].intrinsics.fx / truth.cameras[k].intrinsics.fx - 1.0));
    f_err = std::max(f_err, std::abs(res.rig.cameras[k].intrinsics.fy / truth.cameras[k].intrinsics.fy - 1.0));
  }
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b) {
      const double est = (res.rig.cameras[a].extrinsics.center() - res.rig.cameras[b].extrinsics.center()).norm();
      const double tru = 1000.0 * (truth.cameras[a].extrinsics.center() - truth.cameras[b].extrinsics.center()).norm();
      b_err = std::max(b_err, std::abs(est / tru - 1.0));
    }
  const auto noisy = synth_board_observations(truth, board, 20, 0.5, 22, Vec3(0, 0, 0.6));
  const double rms_noisy = calibrate_rig(board, noisy.observations).rms_error_px;
  const double jac = jacobian_error();
  c.require(f_err < 5e-3, "focal error " + fmt("%.3g", f_err));
  c.require(b_err < 1e-3, "baseline error " + fmt("%.3g", b_err));
  c.require(res.rms_error_px < 1e-4, "noiseless RMS " + fmt("%.3g", res.rms_error_px));
  c.require(rms_noisy >= 0.3 && rms_noisy <= 0.8, "noisy RMS " + fmt("%.3f", rms_noisy));
  c.require(jac < 1e-4, "Jacobian rel error " + fmt("%.3g", jac));
  if (c.ok)
    c.detail = "focal " + fmt("%.1e", f_err) + ", baseline " + fmt("%.1e", b_err) + ", RMS " +
               fmt("%.1e", res.rms_error_px) + " px, noisy RMS " + fmt("%.3f", rms_noisy) + " px, Jacobian " +
               fmt("%.1e", jac);
  return c;
}

Check ldj_oracle() {
  Check c;
  const auto tr = min_jerk_trajectory(Vec3(0.25, 0.0, 0.0), 1.0, 200.0);
  const double v = ldj(tr);
  const double target = std::log(720.0);
  Trajectory3D big = tr, slow = tr;
  for (auto& p : big.p) *p *= 2.0;
  for (auto& t : slow.t) t *= 2.0;
  const double ds = std::abs(ldj(big) - v) / std::abs(v);
  const double dt = std::abs(ldj(slow) - v) / std::abs(v);
  c.require(std::abs(v - target) <= 0.01 * target, "LDJ " + fmt("%.4f", v));
  c.require(ds < 1e-6, "spatial scaling changed LDJ by " + fmt("%.2e", ds));
  c.require(dt < 1e-6, "temporal scaling changed LDJ by " + fmt("%.2e", dt));
  if (c.ok) c.detail = "LDJ " + fmt("%.4f", v) + " vs ln 720 = " + fmt("%.4f", target);
  return c;
}

// rgb24 stream with a lit patch of `lit` pixels inside the ROI on ON frames.
std::string led_stream(const std::vector<int>& lit, int w, int h, std::mt19937_64& rng) {
  std::ostringstream out;
  out << w << " " << h << " 60 rgb24\n";
  std::uniform_int_distribution<int> dim(0, 150);
  for (int n : lit) {
    std::string frame(static_cast<std::size_t>(w * h * 3), '\0');
    for (int i = 0; i < w * h; ++i) {
      const bool on = i < n;
      frame[3 * i] = static_cast<char>(on ? 240 : dim(rng));
      frame[3 * i + 1] = static_cast<char>(on ? 60 : dim(rng));
      frame[3 * i + 2] = static_cast<char>(on ? 50 : dim(rng));
    }
    out << frame;
  }
  return out.str();
}

Check sync_oracle() {
  Check c;
  std::mt19937_64 rng(31);
  RedCountOptions red{200, 30};
  TrimOptions opts;
  opts.pixel_threshold = 5;
  opts.debounce = 2;
  std::vector<IntensityTrace> traces;
  std::map<std::string, std::pair<int, int>> truth;
  const std::vector<std::string> cams{"A", "B", "C"};
  for (std::size_t k = 0; k < cams.size(); ++k) {
    const int on = 7 + 3 * static_cast<int>(k), off = on + 59;
    std::vector<int> lit(static_cast<std::size_t>(off + 15), 0);
    for (int f = on; f <= off; ++f) lit[static_cast<std::size_t>(f)] = 12;
    lit[2] = 6;  // a one-frame flash is debounced away
    std::istringstream stream(led_stream(lit, 8, 6, rng));
    traces.push_back(roi_red_counts(stream, {cams[k], 0, 0, 8, 4}, red));
    traces.back().camera = cams[k];
    truth[cams[k]] = {on, off};
  }
  const TrimPlan plan = plan_trims(traces, opts);
  bool exact = plan.windows.size() == 3;
  for (const auto& wdw : plan.windows)
    exact = exact && truth[wdw.camera] == std::make_pair(wdw.start_frame, wdw.end_frame);
  c.require(exact, "recovered windows differ from the truth");
  TrimOptions two = opts;
  two.num_trials = 2;
  c.require(code_of([&] { plan_trims(traces, two); }) == ErrorCode::EventCountMismatch, "no EventCountMismatch");

  int violations = 0;
  std::uniform_int_distribution<int> count(0, 20), len(20, 120);
  for (int trial = 0; trial < 50; ++trial) {
    IntensityTrace t{"A", 60.0, {}};
    t.counts.resize(static_cast<std::size_t>(len(rng)));
    for (auto& v : t.counts) v = count(rng);
    std::set<int> prev;
    for (int thr = 1; thr <= 21; ++thr) {
      std::set<int> on;
      for (const auto& [a, b] : detect_events(t, thr, 2))
        for (int f = a; f <= b; ++f) on.insert(f);
      if (thr > 1)
        for (int f : on) violations += prev.count(f) == 0;
      prev = on;
    }
  }
  c.require(violations == 0, std::to_string(violations) + " monotonicity violations");
  if (c.ok) c.detail = "3 cameras exact, count mismatch rejected, 50-case threshold sweep monotone";
  return c;
}

Check lab_scale() {
  Check c;
  SyntheticScene s;
  s.rig = make_rig(5, 0.65);
  s.trajectories = synth_hand_trajectories(Vec3(-0.06, -0.08, 0.63), Vec3(0.12, 0.03, 0.03), 1.5, 60.0);
  s.noise_px = 1.0;
  s.seed = 2024;
  const auto sum = error_summary(triangulate_trial(s.rig, project_scene(s)), large_error_threshold_mm("right_hand"));
  c.require(sum.median_mm >= 0.6 && sum.median_mm <= 5.0, "median " + fmt("%.3f", sum.median_mm) + " mm");
  c.require(sum.pct_large < 5.0, "large errors " + fmt("%.2f", sum.pct_large) + " %");
  if (c.ok)
    c.detail = "5 cameras at 0.65 m, 1 px noise: median " + fmt("%.3f", sum.median_mm) + " mm, >10 mm in " +
               fmt("%.2f", sum.pct_large) + " % of frames";
  return c;
}

Check features() {
  Check c;
  std::vector<Vec3> cube;
  for (int i = 0; i < 8; ++i) cube.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  const std::vector<Vec3> tet{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  c.require(std::abs(hull_volume(cube) - 1.0) < 1e-9, "cube volume");
  c.require(std::abs(hull_volume(tet) - 1.0 / 6.0) < 1e-9, "tetrahedron volume");
  c.require(std::abs(joint_angle(Vec3(1, 0, 0), Vec3::Zero(), Vec3(0, 1, 0)) - 90.0) < 1e-9, "right angle");

  const auto& schema = landmark_schema("hand21");
  const auto hand = synth_hand_pose(0.7);
  const auto base = frame_features({hand.begin(), hand.end()}, schema);
  const auto cols = feature_columns(schema);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n(0, 1);
  double worst_angle = 0.0, worst_rel = 0.0;
  for (int m = 0; m < 100; ++m) {
    const Mat3 r = Eigen::AngleAxisd(3 * n(rng), Vec3(n(rng), n(rng), n(rng)).normalized()).toRotationMatrix();
    const Vec3 t(n(rng), n(rng), n(rng));
    std::vector<std::optional<Vec3>> moved;
    for (const auto& p : hand) moved.emplace_back(r * p + t);
    const auto row = frame_features(moved, schema);
    for (std::size_t i = 0; i < row.size(); ++i) {
      const double d = std::abs(*row[i] - *base[i]);
      if (cols[i].rfind("angle_", 0) == 0)
        worst_angle = std::max(worst_angle, d);
      else
        worst_rel = std::max(worst_rel, d / std::abs(*base[i]));
    }
  }
  c.require(worst_angle < 1e-9, "angle drift " + fmt("%.2e", worst_angle));
  c.require(worst_rel < 1e-9, "volume/aperture drift " + fmt("%.2e", worst_rel));
  if (c.ok)
    c.detail = "oracles exact; 100 rigid motions: angle drift " + fmt("%.1e", worst_angle) + " deg, relative " +
               fmt("%.1e", worst_rel);
  return c;
}

Check icc() {
  Check c;
  Eigen::MatrixXd m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  Eigen::MatrixXd same(3, 2);
  same << 1, 1, 4, 4, 2, 2;
  const double v = icc_a1(m), one = icc_a1(same);
  c.require(std::abs(v - 8.0 / 9.0) < 1e-12, "ICC " + fmt("%.15f", v));
  c.require(std::abs(one - 1.0) < 1e-12, "identical columns ICC " + fmt("%.15f", one));
  if (c.ok) c.detail = "ICC " + fmt("%.12f", v) + ", identical columns " + fmt("%.12f", one);
  return c;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = io::read_text(e.path());
  return files;
}

Check determinism() {
  Check c;
  const fs::path dir = fs::temp_directory_path() / "mvt_acceptance_fixture";
  fs::remove_all(dir);
  FixtureOptions opt;
  opt.noise_px = 0.5;
  opt.corner_noise_px = 0.3;
  write_fixture(dir, opt);
  Pipeline p(PipelineConfig::load(dir / "config.json"));
  p.scan();
  const ErrorCode early = code_of([&] { p.triangulate(); });
  c.require(early == ErrorCode::MissingPrerequisite, "triangulate before trim/calibrate gave " +
                                                          std::string(error_code_name(early)));
  const Step steps[] = {Step::Trim, Step::Calibrate, Step::Triangulate, Step::Metrics, Step::Features, Step::Report};
  for (Step s : steps) p.run(s);
  const auto first = snapshot(dir / "output");
  for (Step s : steps) p.run(s);
  const auto second = snapshot(dir / "output");
  c.require(first == second, "second run changed outputs");
  if (c.ok) c.detail = std::to_string(first.size()) + " output files byte-identical across runs";
  fs::remove_all(dir);
  return c;
}

}  // namespace

int main() {
  criterion(1, "end-to-end closure", closure);
  criterion(2, "calibration recovery", calibration);
  criterion(3, "LDJ oracle", ldj_oracle);
  criterion(4, "sync oracle", sync_oracle);
  criterion(5, "metric sanity at lab scale", lab_scale);
  criterion(6, "feature oracles", features);
  criterion(7, "ICC oracle", icc);
  criterion(8, "pipeline determinism", determinism);
  return failed ? 1 : 0;
}
