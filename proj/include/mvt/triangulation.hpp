#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvt/camera_geometry.hpp"

namespace mvt {

struct DetectionRow {
  int frame = 0;
  int landmark_id = 0;
  Vec2 pixel = Vec2::Zero();
  double confidence = 1.0;
};

struct Detections2D {
  std::string camera;
  std::string landmark_schema;
  std::vector<DetectionRow> rows;
};

struct View {
  std::size_t camera = 0;  // rig index
  Vec2 pixel = Vec2::Zero();
  double confidence = 1.0;
};

struct TriangulatedPoint {
  Vec3 position = Vec3::Zero();
  std::vector<std::size_t> used;     // indices into the input views
  std::vector<double> errors_px;     // reprojection error per used view
  double mean_error_px() const;
};

struct TriangulationOptions {
  double min_confidence = 0.5;
  double inlier_threshold_px = 20.0;
};

// Confidence-weighted linear DLT over undistorted rays. Throws
// InsufficientViews (< 2 confident views) or DegenerateGeometry.
TriangulatedPoint triangulate_point(const CameraRig& rig, const std::vector<View>& views, double min_confidence = 0.5);

// Exhaustive camera-pair hypothesis scan followed by re-triangulation on the
// inliers of the best pair.
TriangulatedPoint triangulate_ransac(const CameraRig& rig, const std::vector<View>& views,
                                     const TriangulationOptions& options = {});

// Pixel error to millimetres at the point's depth in `camera`.
double px_to_mm(const CameraRig& rig, std::size_t camera, const Vec3& point, double err_px);

struct Point3DRecord {
  int frame = 0;
  int landmark_id = 0;
  std::optional<Vec3> position;  // absent when fewer than 2 usable views
  int n_cams_used = 0;
  double reproj_error_px = 0.0;
  double reproj_error_mm = 0.0;
};

// Landmark count of a known schema id (hand21, pose33, face468), if any.
std::optional<int> schema_landmark_count(const std::string& schema);

std::vector<Point3DRecord> triangulate_trial(const CameraRig& rig, const std::vector<Detections2D>& detections,
                                             const TriangulationOptions& options = {});

// Detections CSV: frame,landmark_id,x_px,y_px,confidence
Detections2D read_detections_csv(const std::filesystem::path& path, const std::string& camera,
                                 const std::string& schema);
std::string format_detections_csv(const Detections2D& detections);

// 3D CSV: frame,landmark_id,X,Y,Z,n_cams,reproj_error_px,reproj_error_mm
std::string format_points_csv(const std::vector<Point3DRecord>& records);
std::vector<Point3DRecord> read_points_csv(const std::filesystem::path& path);

}  // namespace mvt
