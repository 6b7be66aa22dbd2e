#include "mvt/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <utility>

#include "mvt/error.hpp"
#include "mvt/io.hpp"

namespace mvt {

void LandmarkSchema::validate() const {
  const int n = landmark_count();
  const auto in_range = [n](int i) { return i >= 0 && i < n; };
  for (const auto& e : edges)
    if (!in_range(e[0]) || !in_range(e[1])) fail(ErrorCode::SchemaError, id + ": edge index out of range");
  for (const auto& a : angles)
    if (!in_range(a[0]) || !in_range(a[1]) || !in_range(a[2])) fail(ErrorCode::SchemaError, id + ": angle index out of range");
  for (const auto& a : apertures)
    if (!in_range(a[0]) || !in_range(a[1])) fail(ErrorCode::SchemaError, id + ": aperture index out of range");
}

namespace {

LandmarkSchema make_hand21() {
  LandmarkSchema s;
  s.id = "hand21";
  s.names = {"WRIST",
             "THUMB_CMC", "THUMB_MCP", "THUMB_IP", "THUMB_TIP",
             "INDEX_FINGER_MCP", "INDEX_FINGER_PIP", "INDEX_FINGER_DIP", "INDEX_FINGER_TIP",
             "MIDDLE_FINGER_MCP", "MIDDLE_FINGER_PIP", "MIDDLE_FINGER_DIP", "MIDDLE_FINGER_TIP",
             "RING_FINGER_MCP", "RING_FINGER_PIP", "RING_FINGER_DIP", "RING_FINGER_TIP",
             "PINKY_MCP", "PINKY_PIP", "PINKY_DIP", "PINKY_TIP"};
  for (int finger = 0; finger < 5; ++finger) {
    const int base = 1 + 4 * finger;
    s.edges.push_back({0, base});
    for (int j = 0; j < 3; ++j) s.edges.push_back({base + j, base + j + 1});
    s.angles.push_back({0, base, base + 1});
    s.angles.push_back({base, base + 1, base + 2});
    s.angles.push_back({base + 1, base + 2, base + 3});
  }
  s.apertures = {{4, 8}};
  return s;
}

LandmarkSchema make_pose33() {
  LandmarkSchema s;
  s.id = "pose33";
  s.names = {"NOSE", "LEFT_EYE_INNER", "LEFT_EYE", "LEFT_EYE_OUTER", "RIGHT_EYE_INNER", "RIGHT_EYE",
             "RIGHT_EYE_OUTER", "LEFT_EAR", "RIGHT_EAR", "MOUTH_LEFT", "MOUTH_RIGHT", "LEFT_SHOULDER",
             "RIGHT_SHOULDER", "LEFT_ELBOW", "RIGHT_ELBOW", "LEFT_WRIST", "RIGHT_WRIST", "LEFT_PINKY",
             "RIGHT_PINKY", "LEFT_INDEX", "RIGHT_INDEX", "LEFT_THUMB", "RIGHT_THUMB", "LEFT_HIP",
             "RIGHT_HIP", "LEFT_KNEE", "RIGHT_KNEE", "LEFT_ANKLE", "RIGHT_ANKLE", "LEFT_HEEL",
             "RIGHT_HEEL", "LEFT_FOOT_INDEX", "RIGHT_FOOT_INDEX"};
  s.edges = {{11, 12}, {11, 13}, {13, 15}, {12, 14}, {14, 16}, {11, 23}, {12, 24}, {23, 24},
             {23, 25}, {25, 27}, {24, 26}, {26, 28}, {27, 29}, {29, 31}, {28, 30}, {30, 32}};
  s.angles = {{11, 13, 15}, {12, 14, 16}, {13, 11, 23}, {14, 12, 24},
              {11, 23, 25}, {12, 24, 26}, {23, 25, 27}, {24, 26, 28}};
  s.apertures = {{15, 16}};
  return s;
}

LandmarkSchema make_face468() {
  LandmarkSchema s;
  s.id = "face468";
  for (int i = 0; i < 468; ++i) s.names.push_back("FACE_" + std::to_string(i));
  s.names[13] = "UPPER_LIP_INNER";
  s.names[14] = "LOWER_LIP_INNER";
  s.apertures = {{13, 14}};
  return s;
}

}  // namespace

const LandmarkSchema& landmark_schema(const std::string& id) {
  static const LandmarkSchema hand = make_hand21();
  static const LandmarkSchema pose = make_pose33();
  static const LandmarkSchema face = make_face468();
  if (id == "hand21") return hand;
  if (id == "pose33") return pose;
  if (id == "face468") return face;
  fail(ErrorCode::InvalidArgument, "unknown landmark schema '" + id + "'");
}

std::string schema_for_body_part(const std::string& body_part) {
  if (body_part == "right_hand" || body_part == "left_hand") return "hand21";
  if (body_part == "full_body") return "pose33";
  if (body_part == "face") return "face468";
  fail(ErrorCode::InvalidArgument, "unknown body part '" + body_part + "'");
}

double joint_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u = a - b;
  const Vec3 v = c - b;
  if (!(u.norm() > 0.0) || !(v.norm() > 0.0)) fail(ErrorCode::DegenerateVertex, "angle arm has zero length");
  return std::atan2(u.cross(v).norm(), u.dot(v)) * 180.0 / std::numbers::pi;
}

double hull_volume(std::span<const Vec3> pts) {
  if (pts.size() < 4) fail(ErrorCode::TooFewPoints, "hull needs at least 4 points");
  Vec3 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = (hi - lo).norm();
  if (!(extent > 0.0)) return 0.0;
  const double eps = 1e-10 * extent;

  // Initial non-degenerate tetrahedron.
  std::size_t i0 = 0, i1 = 0, i2 = 0, i3 = 0;
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (const double d = (pts[i] - pts[i0]).norm(); d > best) best = d, i1 = i;
  if (best <= eps) return 0.0;
  const Vec3 dir = (pts[i1] - pts[i0]).normalized();
  best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (const double d = (pts[i] - pts[i0]).cross(dir).norm(); d > best) best = d, i2 = i;
  if (best <= eps) return 0.0;
  const Vec3 plane_n = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (const double d = std::abs((pts[i] - pts[i0]).dot(plane_n)); d > best) best = d, i3 = i;
  if (best <= eps) return 0.0;

  const Vec3 interior = 0.25 * (pts[i0] + pts[i1] + pts[i2] + pts[i3]);
  struct Face {
    std::array<std::size_t, 3> v;
    Vec3 normal;
    double offset;
  };
  std::vector<Face> faces;
  const auto make_face = [&](std::size_t a, std::size_t b, std::size_t c) {
    Vec3 n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    if (n.dot(interior - pts[a]) > 0.0) {
      std::swap(b, c);
      n = -n;
    }
    n.normalize();
    faces.push_back({{a, b, c}, n, n.dot(pts[a])});
  };
  make_face(i0, i1, i2);
  make_face(i0, i1, i3);
  make_face(i0, i2, i3);
  make_face(i1, i2, i3);

  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i == i0 || i == i1 || i == i2 || i == i3) continue;
    std::vector<bool> visible(faces.size(), false);
    bool any = false;
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (faces[f].normal.dot(pts[i]) - faces[f].offset > eps) visible[f] = any = true;
    if (!any) continue;
    std::set<std::pair<std::size_t, std::size_t>> visible_edges;
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (visible[f])
        for (int e = 0; e < 3; ++e) visible_edges.emplace(faces[f].v[static_cast<std::size_t>(e)], faces[f].v[static_cast<std::size_t>((e + 1) % 3)]);
    std::vector<std::pair<std::size_t, std::size_t>> horizon;
    for (const auto& [u, v] : visible_edges)
      if (!visible_edges.count({v, u})) horizon.emplace_back(u, v);
    std::vector<Face> kept;
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (!visible[f]) kept.push_back(faces[f]);
    faces = std::move(kept);
    for (const auto& [u, v] : horizon) make_face(u, v, i);
  }

  double volume = 0.0;
  for (const auto& f : faces)
    volume += (pts[f.v[0]] - interior).dot((pts[f.v[1]] - interior).cross(pts[f.v[2]] - interior)) / 6.0;
  return std::abs(volume);
}

std::vector<std::string> feature_columns(const LandmarkSchema& schema) {
  std::vector<std::string> cols;
  for (const auto& a : schema.angles) cols.push_back("angle_" + schema.names[static_cast<std::size_t>(a[1])]);
  cols.emplace_back("hull_volume");
  for (const auto& a : schema.apertures)
    cols.push_back("aperture_" + schema.names[static_cast<std::size_t>(a[0])] + "_" +
                   schema.names[static_cast<std::size_t>(a[1])]);
  return cols;
}

std::vector<std::optional<double>> frame_features(const std::vector<std::optional<Vec3>>& lm,
                                                  const LandmarkSchema& schema) {
  if (static_cast<int>(lm.size()) != schema.landmark_count())
    fail(ErrorCode::SchemaMismatch, "frame has " + std::to_string(lm.size()) + " landmarks, schema " + schema.id +
                                        " expects " + std::to_string(schema.landmark_count()));
  const auto at = [&](int i) -> const std::optional<Vec3>& { return lm[static_cast<std::size_t>(i)]; };
  std::vector<std::optional<double>> row;
  for (const auto& a : schema.angles) {
    std::optional<double> v;
    if (at(a[0]) && at(a[1]) && at(a[2])) {
      try {
        v = joint_angle(*at(a[0]), *at(a[1]), *at(a[2]));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateVertex) throw;
      }
    }
    row.push_back(v);
  }
  std::vector<Vec3> present;
  for (const auto& p : lm)
    if (p) present.push_back(*p);
  row.push_back(present.size() >= 4 ? std::optional<double>(hull_volume(present)) : std::nullopt);
  for (const auto& a : schema.apertures)
    row.push_back(at(a[0]) && at(a[1]) ? std::optional<double>((*at(a[0]) - *at(a[1])).norm()) : std::nullopt);
  return row;
}

FeatureTable feature_table(const std::vector<Trajectory3D>& trajs, const LandmarkSchema& schema) {
  FeatureTable table;
  table.columns = feature_columns(schema);
  if (trajs.empty()) return table;
  const auto& ref = trajs.front();
  for (const auto& t : trajs) {
    if (t.landmark_id < 0 || t.landmark_id >= schema.landmark_count())
      fail(ErrorCode::SchemaMismatch, "landmark " + std::to_string(t.landmark_id) + " outside schema " + schema.id);
    if (t.t != ref.t) fail(ErrorCode::InvalidArgument, "trajectories do not share a time base");
  }
  for (std::size_t i = 0; i < ref.size(); ++i) {
    std::vector<std::optional<Vec3>> lm(static_cast<std::size_t>(schema.landmark_count()));
    for (const auto& t : trajs) lm[static_cast<std::size_t>(t.landmark_id)] = t.p[i];
    table.frames.push_back(ref.source_fps > 0.0 ? static_cast<int>(std::lround(ref.t[i] * ref.source_fps))
                                                : static_cast<int>(i));
    table.rows.push_back(frame_features(lm, schema));
  }
  return table;
}

std::string format_feature_csv(const FeatureTable& table) {
  std::string out = "frame";
  for (const auto& c : table.columns) out += "," + c;
  out += "\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out += std::to_string(table.frames[r]);
    for (const auto& v : table.rows[r]) out += "," + io::format_optional(v);
    out += "\n";
  }
  return out;
}

}  // namespace mvt
