#include "mvt/trajectory.hpp"

#include <cmath>
#include <map>

#include "mvt/error.hpp"

namespace mvt {

std::size_t Trajectory3D::present_count() const {
  std::size_t n = 0;
  for (const auto& s : p) n += s.has_value();
  return n;
}

void Trajectory3D::validate() const {
  if (t.size() != p.size()) fail(ErrorCode::InvalidArgument, "trajectory times and positions differ in length");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) fail(ErrorCode::InvalidArgument, "trajectory times must strictly increase");
}

std::vector<Trajectory3D> trajectories_from_records(const std::vector<Point3DRecord>& records, double fps) {
  if (!(fps > 0.0)) fail(ErrorCode::InvalidArgument, "fps must be positive");
  std::map<int, std::map<int, std::optional<Vec3>>> by_landmark;
  std::set<int> frames;
  for (const auto& r : records) {
    by_landmark[r.landmark_id][r.frame] = r.position;
    frames.insert(r.frame);
  }
  std::vector<Trajectory3D> out;
  if (frames.empty()) return out;
  const int first = *frames.begin();
  const int last = *frames.rbegin();
  for (const auto& [lm, samples] : by_landmark) {
    Trajectory3D traj;
    traj.landmark_id = lm;
    traj.source_fps = fps;
    for (int f = first; f <= last; ++f) {
      traj.t.push_back(f / fps);
      const auto it = samples.find(f);
      traj.p.push_back(it == samples.end() ? std::nullopt : it->second);
    }
    out.push_back(std::move(traj));
  }
  return out;
}

Trajectory3D interpolate_gaps(const Trajectory3D& traj, int max_gap_frames) {
  traj.validate();
  Trajectory3D out = traj;
  const std::size_t n = traj.size();
  std::size_t i = 0;
  while (i < n) {
    if (traj.p[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !traj.p[j]) ++j;
    // Missing run [i, j); fill only interior runs within the cap.
    if (i > 0 && j < n && static_cast<long>(j - i) <= max_gap_frames) {
      const Vec3& a = *traj.p[i - 1];
      const Vec3& b = *traj.p[j];
      const double ta = traj.t[i - 1];
      const double tb = traj.t[j];
      for (std::size_t k = i; k < j; ++k) {
        const double w = (traj.t[k] - ta) / (tb - ta);
        out.p[k] = a + w * (b - a);
      }
    }
    i = j;
  }
  return out;
}

Trajectory3D resample_uniform(const Trajectory3D& traj, double dt) {
  traj.validate();
  if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "dt must be positive");
  if (traj.present_count() < 2) fail(ErrorCode::TooShort, "resampling needs at least 2 present samples");
  std::size_t first = 0;
  while (!traj.p[first]) ++first;
  std::size_t last = traj.size() - 1;
  while (!traj.p[last]) --last;

  Trajectory3D out;
  out.landmark_id = traj.landmark_id;
  out.source_fps = traj.source_fps;
  const double t0 = traj.t[first];
  const double t_end = traj.t[last];
  const double slack = 1e-9 * dt;
  std::size_t seg = first;
  for (long k = 0;; ++k) {
    const double tk = t0 + static_cast<double>(k) * dt;
    if (tk > t_end + slack) break;
    while (seg + 1 < last && traj.t[seg + 1] <= tk) ++seg;
    std::optional<Vec3> value;
    if (std::abs(tk - traj.t[seg]) <= slack) {
      value = traj.p[seg];
    } else if (seg + 1 <= last && std::abs(tk - traj.t[seg + 1]) <= slack) {
      value = traj.p[seg + 1];
    } else if (seg + 1 <= last && traj.p[seg] && traj.p[seg + 1]) {
      const double w = (tk - traj.t[seg]) / (traj.t[seg + 1] - traj.t[seg]);
      value = *traj.p[seg] + w * (*traj.p[seg + 1] - *traj.p[seg]);
    }
    out.t.push_back(tk);
    out.p.push_back(value);
  }
  return out;
}

double uniform_spacing(const Trajectory3D& traj) {
  traj.validate();
  if (traj.size() < 2) fail(ErrorCode::TooShort, "need at least 2 samples");
  const double dt = (traj.t.back() - traj.t.front()) / static_cast<double>(traj.size() - 1);
  for (std::size_t i = 1; i < traj.size(); ++i)
    if (std::abs((traj.t[i] - traj.t[i - 1]) - dt) > 1e-6 * dt)
      fail(ErrorCode::NonUniform, "sample spacing varies at index " + std::to_string(i));
  return dt;
}

namespace {

std::vector<Vec3> gradient(const std::vector<Vec3>& x, double dt) {
  const std::size_t n = x.size();
  std::vector<Vec3> d(n, Vec3::Zero());
  if (n < 2) return d;
  d[0] = (x[1] - x[0]) / dt;
  d[n - 1] = (x[n - 1] - x[n - 2]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt);
  return d;
}

}  // namespace

Kinematics kinematics(const Trajectory3D& traj) {
  const double dt = uniform_spacing(traj);
  std::vector<Vec3> pos;
  pos.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (!traj.p[i]) fail(ErrorCode::ContainsGaps, "missing sample at index " + std::to_string(i));
    pos.push_back(*traj.p[i]);
  }
  Kinematics k;
  k.dt = dt;
  const auto vel = gradient(pos, dt);
  const auto acc = gradient(vel, dt);
  k.jerk = gradient(acc, dt);
  for (const auto& v : vel) k.speed.push_back(v.norm());
  for (const auto& a : acc) k.acceleration.push_back(a.norm());
  for (std::size_t i = 1; i < pos.size(); ++i) k.path_length += (pos[i] - pos[i - 1]).norm();
  return k;
}

std::set<std::size_t> detect_reversals(const Trajectory3D& traj) {
  std::set<std::size_t> flagged;
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    if (!traj.p[i - 1] || !traj.p[i] || !traj.p[i + 1]) continue;
    const Vec3 before = *traj.p[i] - *traj.p[i - 1];
    const Vec3 after = *traj.p[i + 1] - *traj.p[i];
    if (after.dot(before) < 0.0) flagged.insert(i);
  }
  return flagged;
}

}  // namespace mvt
