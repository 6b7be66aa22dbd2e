#pragma once

#include <optional>
#include <set>
#include <vector>

#include "mvt/camera_geometry.hpp"
#include "mvt/triangulation.hpp"

namespace mvt {

struct Trajectory3D {
  int landmark_id = 0;
  std::vector<double> t;                // seconds, strictly increasing
  std::vector<std::optional<Vec3>> p;   // world units; nullopt = missing
  double source_fps = 0.0;

  std::size_t size() const { return t.size(); }
  std::size_t present_count() const;
  void validate() const;
};

// One trajectory per landmark from frame-indexed records; t = frame / fps.
std::vector<Trajectory3D> trajectories_from_records(const std::vector<Point3DRecord>& records, double fps);

// Linear fill of interior gaps no longer than max_gap_frames samples.
Trajectory3D interpolate_gaps(const Trajectory3D& traj, int max_gap_frames);

// Linear resampling onto t0, t0 + dt, ... up to the last present sample.
Trajectory3D resample_uniform(const Trajectory3D& traj, double dt);

struct Kinematics {
  double dt = 0.0;
  std::vector<double> speed;
  std::vector<double> acceleration;  // magnitude
  std::vector<Vec3> jerk;
  double path_length = 0.0;
};

// Repeated central differences (one-sided at the ends). Throws NonUniform
// or ContainsGaps.
Kinematics kinematics(const Trajectory3D& traj);

// Sample indices where consecutive displacements point against each other.
std::set<std::size_t> detect_reversals(const Trajectory3D& traj);

// Sample spacing of a uniform trajectory; throws NonUniform otherwise.
double uniform_spacing(const Trajectory3D& traj);

}  // namespace mvt
