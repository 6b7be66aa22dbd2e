#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvt/camera_geometry.hpp"
#include "mvt/trajectory.hpp"

namespace mvt {

struct LandmarkSchema {
  std::string id;
  std::vector<std::string> names;
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 3>> angles;    // (a, vertex, c)
  std::vector<std::array<int, 2>> apertures;

  int landmark_count() const { return static_cast<int>(names.size()); }
  void validate() const;
};

// hand21 (MediaPipe hand), pose33 (MediaPipe pose), face468 (face mesh).
const LandmarkSchema& landmark_schema(const std::string& id);
// right_hand/left_hand -> hand21, full_body -> pose33, face -> face468.
std::string schema_for_body_part(const std::string& body_part);

// Angle at b between (a - b) and (c - b), degrees in [0, 180].
double joint_angle(const Vec3& a, const Vec3& b, const Vec3& c);

// Volume of the 3D convex hull; 0 for coplanar or collinear sets.
double hull_volume(std::span<const Vec3> points);

struct FeatureTable {
  std::vector<std::string> columns;
  std::vector<int> frames;
  std::vector<std::vector<std::optional<double>>> rows;
};

std::vector<std::string> feature_columns(const LandmarkSchema& schema);

// Features for one frame from per-landmark positions (index = landmark id).
std::vector<std::optional<double>> frame_features(const std::vector<std::optional<Vec3>>& landmarks,
                                                  const LandmarkSchema& schema);

FeatureTable feature_table(const std::vector<Trajectory3D>& trajs, const LandmarkSchema& schema);

std::string format_feature_csv(const FeatureTable& table);

}  // namespace mvt
