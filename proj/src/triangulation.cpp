#include "mvt/triangulation.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "mvt/error.hpp"
#include "mvt/io.hpp"

namespace mvt {

double TriangulatedPoint::mean_error_px() const {
  if (errors_px.empty()) return 0.0;
  return std::accumulate(errors_px.begin(), errors_px.end(), 0.0) / static_cast<double>(errors_px.size());
}

namespace {

// cap truncates each view's error so a single gross outlier cannot dominate the mean.
double mean_reprojection(const CameraRig& rig, const std::vector<View>& views, const std::vector<std::size_t>& which,
                         const Vec3& point, double cap = std::numeric_limits<double>::infinity()) {
  double sum = 0.0;
  for (std::size_t i : which) {
    const auto& v = views[i];
    try {
      sum += std::min(cap, (project_point(rig.cameras[v.camera], point) - v.pixel).norm());
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return sum / static_cast<double>(which.size());
}

}  // namespace

TriangulatedPoint triangulate_point(const CameraRig& rig, const std::vector<View>& views, double min_confidence) {
  std::vector<std::size_t> used;
  std::vector<Vec2> rays;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& v = views[i];
    if (v.camera >= rig.size()) fail(ErrorCode::InvalidArgument, "view refers to an unknown camera");
    if (!(v.confidence >= min_confidence) || !v.pixel.allFinite()) continue;
    try {
      rays.push_back(undistort_point(rig.cameras[v.camera].intrinsics, v.pixel));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoConvergence) throw;
      continue;
    }
    used.push_back(i);
  }
  if (used.size() < 2)
    fail(ErrorCode::InsufficientViews, "need 2 confident views, have " + std::to_string(used.size()));

  // Work in a frame centred on the cameras with unit mean spread.
  std::vector<Vec3> centers;
  Vec3 centroid = Vec3::Zero();
  for (std::size_t i : used) {
    centers.push_back(rig.cameras[views[i].camera].extrinsics.center());
    centroid += centers.back();
  }
  centroid /= static_cast<double>(used.size());
  double spread = 0.0;
  for (const auto& c : centers) spread += (c - centroid).norm();
  spread /= static_cast<double>(centers.size());
  if (!(spread > 1e-12 * (1.0 + centroid.norm())))
    fail(ErrorCode::DegenerateGeometry, "contributing cameras share one centre");

  Eigen::MatrixXd a(2 * static_cast<Eigen::Index>(used.size()), 4);
  for (std::size_t k = 0; k < used.size(); ++k) {
    const auto& v = views[used[k]];
    const auto& e = rig.cameras[v.camera].extrinsics;
    const Mat3 r = e.rotation();
    Eigen::Matrix<double, 3, 4> p;
    p.leftCols<3>() = r;
    p.col(3) = (r * centroid + e.tvec) / spread;
    const auto row = static_cast<Eigen::Index>(2 * k);
    a.row(row) = v.confidence * (rays[k].x() * p.row(2) - p.row(0));
    a.row(row + 1) = v.confidence * (rays[k].y() * p.row(2) - p.row(1));
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (!(sv[2] > 1e-12 * sv[0])) fail(ErrorCode::DegenerateGeometry, "rays do not determine a unique point");
  const Eigen::Vector4d xh = svd.matrixV().col(3);
  if (!(std::abs(xh[3]) > 1e-12 * xh.head<3>().norm()))
    fail(ErrorCode::DegenerateGeometry, "rays are parallel (point at infinity)");

  TriangulatedPoint out;
  out.position = centroid + spread * (xh.head<3>() / xh[3]);
  out.used = used;
  for (std::size_t i : used) {
    const auto& v = views[i];
    if (!(camera_depth(rig.cameras[v.camera].extrinsics, out.position) > 0.0))
      fail(ErrorCode::DegenerateGeometry, "triangulated point lies behind camera " + rig.cameras[v.camera].name);
    out.errors_px.push_back((project_point(rig.cameras[v.camera], out.position) - v.pixel).norm());
  }
  return out;
}

TriangulatedPoint triangulate_ransac(const CameraRig& rig, const std::vector<View>& views,
                                     const TriangulationOptions& options) {
  std::vector<std::size_t> confident;
  for (std::size_t i = 0; i < views.size(); ++i)
    if (views[i].confidence >= options.min_confidence && views[i].pixel.allFinite()) confident.push_back(i);
  if (confident.size() < 3) return triangulate_point(rig, views, options.min_confidence);

  std::optional<TriangulatedPoint> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < confident.size(); ++a)
    for (std::size_t b = a + 1; b < confident.size(); ++b) {
      const std::vector<View> pair{views[confident[a]], views[confident[b]]};
      TriangulatedPoint candidate;
      try {
        candidate = triangulate_point(rig, pair, options.min_confidence);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateGeometry && e.code() != ErrorCode::InsufficientViews) throw;
        continue;
      }
      candidate.used = {confident[a], confident[b]};
      const double score = mean_reprojection(rig, views, confident, candidate.position, options.inlier_threshold_px);
      if (!best || score < best_score) {
        best = candidate;
        best_score = score;
      }
    }
  if (!best) fail(ErrorCode::DegenerateGeometry, "no camera pair yields a valid point");

  std::vector<std::size_t> inliers;
  for (std::size_t i : confident) {
    try {
      if ((project_point(rig.cameras[views[i].camera], best->position) - views[i].pixel).norm() <=
          options.inlier_threshold_px)
        inliers.push_back(i);
    } catch (const Error&) {
    }
  }
  if (inliers.size() < 2) inliers = best->used;

  std::vector<View> subset;
  for (std::size_t i : inliers) subset.push_back(views[i]);
  const double pair_error = mean_reprojection(rig, views, inliers, best->position);
  try {
    TriangulatedPoint refined = triangulate_point(rig, subset, options.min_confidence);
    std::vector<std::size_t> mapped;
    for (std::size_t k : refined.used) mapped.push_back(inliers[k]);
    refined.used = mapped;
    if (refined.used.size() == inliers.size() && refined.mean_error_px() <= pair_error) return refined;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateGeometry && e.code() != ErrorCode::InsufficientViews) throw;
  }
  // The linear refit can lose to the pair hypothesis in reprojection terms.
  TriangulatedPoint fallback;
  fallback.position = best->position;
  fallback.used = inliers;
  for (std::size_t i : inliers)
    fallback.errors_px.push_back((project_point(rig.cameras[views[i].camera], best->position) - views[i].pixel).norm());
  return fallback;
}

double px_to_mm(const CameraRig& rig, std::size_t camera, const Vec3& point, double err_px) {
  if (camera >= rig.size()) fail(ErrorCode::InvalidArgument, "unknown camera index");
  const auto& cam = rig.cameras[camera];
  const double depth = camera_depth(cam.extrinsics, point);
  if (!(depth > 0.0)) fail(ErrorCode::NonPositiveDepth, "point is behind camera " + cam.name);
  const double mean_focal = 0.5 * (cam.intrinsics.fx + cam.intrinsics.fy);
  return err_px * depth * rig.unit_scale / mean_focal;
}

std::optional<int> schema_landmark_count(const std::string& schema) {
  if (schema == "hand21") return 21;
  if (schema == "pose33") return 33;
  if (schema == "face468") return 468;
  return std::nullopt;
}

std::vector<Point3DRecord> triangulate_trial(const CameraRig& rig, const std::vector<Detections2D>& detections,
                                             const TriangulationOptions& options) {
  if (detections.empty()) fail(ErrorCode::EmptyInput, "no detections");
  const std::string schema = detections.front().landmark_schema;
  for (const auto& d : detections)
    if (d.landmark_schema != schema)
      fail(ErrorCode::SchemaMismatch, "camera " + d.camera + " uses schema '" + d.landmark_schema + "', expected '" +
                                          schema + "'");

  int landmark_count = 0;
  bool any_row = false;
  for (const auto& d : detections)
    for (const auto& row : d.rows) {
      landmark_count = std::max(landmark_count, row.landmark_id + 1);
      any_row = true;
    }
  if (!any_row) fail(ErrorCode::EmptyInput, "detections contain no rows");
  if (const auto known = schema_landmark_count(schema)) {
    if (landmark_count > *known)
      fail(ErrorCode::SchemaMismatch, "landmark id " + std::to_string(landmark_count - 1) + " outside schema " + schema);
    landmark_count = *known;
  }

  // frame -> landmark -> views
  std::map<int, std::map<int, std::vector<View>>> grouped;
  for (const auto& d : detections) {
    const std::size_t cam = rig.index_of(d.camera);
    std::set<std::pair<int, int>> seen;
    for (const auto& row : d.rows) {
      if (row.landmark_id < 0) fail(ErrorCode::SchemaMismatch, "negative landmark id");
      if (!seen.emplace(row.frame, row.landmark_id).second)
        fail(ErrorCode::InvalidArgument, "camera " + d.camera + " has two rows for frame " +
                                             std::to_string(row.frame) + " landmark " + std::to_string(row.landmark_id));
      grouped[row.frame][row.landmark_id].push_back({cam, row.pixel, row.confidence});
    }
  }

  std::vector<Point3DRecord> records;
  for (const auto& [frame, landmarks] : grouped) {
    for (int lm = 0; lm < landmark_count; ++lm) {
      Point3DRecord rec;
      rec.frame = frame;
      rec.landmark_id = lm;
      const auto it = landmarks.find(lm);
      if (it != landmarks.end()) {
        try {
          const TriangulatedPoint tp = triangulate_ransac(rig, it->second, options);
          rec.position = tp.position;
          rec.n_cams_used = static_cast<int>(tp.used.size());
          rec.reproj_error_px = tp.mean_error_px();
          double mm = 0.0;
          for (std::size_t k = 0; k < tp.used.size(); ++k)
            mm += px_to_mm(rig, it->second[tp.used[k]].camera, tp.position, tp.errors_px[k]);
          rec.reproj_error_mm = mm / static_cast<double>(tp.used.size());
        } catch (const Error& e) {
          if (e.code() != ErrorCode::InsufficientViews && e.code() != ErrorCode::DegenerateGeometry &&
              e.code() != ErrorCode::NonPositiveDepth)
            throw;
          rec = Point3DRecord{frame, lm, std::nullopt, 0, 0.0, 0.0};
        }
      }
      records.push_back(rec);
    }
  }
  return records;
}

Detections2D read_detections_csv(const std::filesystem::path& path, const std::string& camera,
                                 const std::string& schema) {
  const auto table = io::read_csv(path, {"frame", "landmark_id", "x_px", "y_px", "confidence"});
  const auto ifr = table.column("frame"), ilm = table.column("landmark_id"), ix = table.column("x_px"),
             iy = table.column("y_px"), ic = table.column("confidence");
  Detections2D d{camera, schema, {}};
  d.rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      DetectionRow det{static_cast<int>(io::parse_int(row[ifr])), static_cast<int>(io::parse_int(row[ilm])),
                       Vec2(io::parse_double(row[ix]), io::parse_double(row[iy])), io::parse_double(row[ic])};
      if (!(det.confidence >= 0.0 && det.confidence <= 1.0))
        fail(ErrorCode::ParseError, "confidence outside [0,1]");
      d.rows.push_back(det);
    } catch (const Error& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(table.line_numbers[r]) + ": " + e.what());
    }
  }
  return d;
}

std::string format_detections_csv(const Detections2D& detections) {
  std::string out = "frame,landmark_id,x_px,y_px,confidence\n";
  for (const auto& r : detections.rows)
    out += std::to_string(r.frame) + "," + std::to_string(r.landmark_id) + "," + io::format_double(r.pixel.x()) + "," +
           io::format_double(r.pixel.y()) + "," + io::format_double(r.confidence) + "\n";
  return out;
}

std::string format_points_csv(const std::vector<Point3DRecord>& records) {
  std::string out = "frame,landmark_id,X,Y,Z,n_cams,reproj_error_px,reproj_error_mm\n";
  for (const auto& r : records) {
    out += std::to_string(r.frame) + "," + std::to_string(r.landmark_id) + ",";
    if (r.position) {
      out += io::format_double(r.position->x()) + "," + io::format_double(r.position->y()) + "," +
             io::format_double(r.position->z()) + "," + std::to_string(r.n_cams_used) + "," +
             io::format_double(r.reproj_error_px) + "," + io::format_double(r.reproj_error_mm) + "\n";
    } else {
      out += ",,,,,\n";
    }
  }
  return out;
}

std::vector<Point3DRecord> read_points_csv(const std::filesystem::path& path) {
  const auto table =
      io::read_csv(path, {"frame", "landmark_id", "X", "Y", "Z", "n_cams", "reproj_error_px", "reproj_error_mm"});
  const auto c = [&](const char* name) { return table.column(name); };
  const auto ifr = c("frame"), ilm = c("landmark_id"), ix = c("X"), iy = c("Y"), iz = c("Z"), in = c("n_cams"),
             ipx = c("reproj_error_px"), imm = c("reproj_error_mm");
  std::vector<Point3DRecord> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      Point3DRecord rec;
      rec.frame = static_cast<int>(io::parse_int(row[ifr]));
      rec.landmark_id = static_cast<int>(io::parse_int(row[ilm]));
      if (!row[ix].empty()) {
        rec.position = Vec3(io::parse_double(row[ix]), io::parse_double(row[iy]), io::parse_double(row[iz]));
        rec.n_cams_used = static_cast<int>(io::parse_int(row[in]));
        rec.reproj_error_px = io::parse_double(row[ipx]);
        rec.reproj_error_mm = io::parse_double(row[imm]);
      }
      out.push_back(rec);
    } catch (const Error& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(table.line_numbers[r]) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mvt
