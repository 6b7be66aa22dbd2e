#include "mvt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "mvt/error.hpp"

namespace mvt {

namespace {

// Dimensionless jerk below this is treated as numerically zero.
constexpr double kZeroJerkFloor = 1e-9;

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::EmptyInput, "median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::InvalidArgument, "pearson inputs differ in length");
  if (x.size() < 2) fail(ErrorCode::ZeroVariance, "pearson needs at least 2 pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  // Variation at rounding level counts as none.
  const double floor_x = 1e-24 * n * std::max(1.0, mx * mx);
  const double floor_y = 1e-24 * n * std::max(1.0, my * my);
  if (!(sxx > floor_x) || !(syy > floor_y)) fail(ErrorCode::ZeroVariance, "series has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

const char* correlation_mode_name(CorrelationMode mode) {
  return mode == CorrelationMode::PositionNorm ? "position_norm" : "displacement_norm";
}

CorrelationMode parse_correlation_mode(const std::string& name) {
  if (name == "position_norm") return CorrelationMode::PositionNorm;
  if (name == "displacement_norm") return CorrelationMode::DisplacementNorm;
  fail(ErrorCode::InvalidArgument, "unknown correlation mode '" + name + "'");
}

double marker_interframe_correlation(const Trajectory3D& traj, CorrelationMode mode) {
  const auto reversals = detect_reversals(traj);
  const auto flagged = [&](std::size_t i) { return reversals.count(i) > 0; };
  std::vector<double> x, y;
  const std::size_t n = traj.size();
  if (mode == CorrelationMode::PositionNorm) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!traj.p[i] || !traj.p[i + 1] || flagged(i) || flagged(i + 1)) continue;
      x.push_back(traj.p[i]->norm());
      y.push_back(traj.p[i + 1]->norm());
    }
  } else {
    // d_i = |p_{i+1} - p_i|; the pair (d_i, d_{i+1}) straddles sample i+1.
    for (std::size_t i = 0; i + 2 < n; ++i) {
      if (!traj.p[i] || !traj.p[i + 1] || !traj.p[i + 2] || flagged(i + 1)) continue;
      x.push_back((*traj.p[i + 1] - *traj.p[i]).norm());
      y.push_back((*traj.p[i + 2] - *traj.p[i + 1]).norm());
    }
  }
  return pearson(x, y);
}

MarkerAggregate interframe_correlation(const std::vector<Trajectory3D>& trajs, CorrelationMode mode) {
  MarkerAggregate agg;
  for (const auto& t : trajs) {
    try {
      agg.per_marker.push_back(marker_interframe_correlation(t, mode));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroVariance) throw;
      ++agg.excluded;
    }
  }
  if (agg.per_marker.empty()) fail(ErrorCode::ZeroVariance, "no marker has a usable correlation series");
  agg.value = median(agg.per_marker);
  return agg;
}

double ldj(const Trajectory3D& traj, std::optional<std::pair<double, double>> window) {
  Trajectory3D span = traj;
  if (window) {
    span = Trajectory3D{traj.landmark_id, {}, {}, traj.source_fps};
    for (std::size_t i = 0; i < traj.size(); ++i)
      if (traj.t[i] >= window->first - 1e-12 && traj.t[i] <= window->second + 1e-12) {
        span.t.push_back(traj.t[i]);
        span.p.push_back(traj.p[i]);
      }
  }
  if (span.size() < 8) fail(ErrorCode::TooShort, "LDJ needs at least 8 samples");
  const Kinematics k = kinematics(span);
  if (!(k.path_length > 0.0)) fail(ErrorCode::ZeroPath, "marker does not move");
  const double duration = span.t.back() - span.t.front();
  double integral = 0.0;
  for (std::size_t i = 1; i < k.jerk.size(); ++i)
    integral += 0.5 * (k.jerk[i - 1].squaredNorm() + k.jerk[i].squaredNorm()) * k.dt;
  const double dimensionless = std::pow(duration, 5) / (k.path_length * k.path_length) * integral;
  if (!(dimensionless > kZeroJerkFloor)) fail(ErrorCode::DegenerateZeroJerk, "jerk integral is zero");
  return std::log(dimensionless);
}

MarkerAggregate ldj_median(const std::vector<Trajectory3D>& trajs) {
  MarkerAggregate agg;
  for (const auto& t : trajs) {
    try {
      agg.per_marker.push_back(ldj(t));
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::TooShort:
        case ErrorCode::ZeroPath:
        case ErrorCode::DegenerateZeroJerk:
        case ErrorCode::ContainsGaps:
          ++agg.excluded;
          break;
        default:
          throw;
      }
    }
  }
  if (agg.per_marker.empty()) fail(ErrorCode::DegenerateZeroJerk, "no marker has a usable LDJ");
  agg.value = median(agg.per_marker);
  return agg;
}

ErrorSummary error_summary(const std::vector<Point3DRecord>& records, double threshold_mm) {
  std::map<int, std::vector<double>> per_marker, per_frame;
  for (const auto& r : records) {
    if (!r.position) continue;
    per_marker[r.landmark_id].push_back(r.reproj_error_mm);
    per_frame[r.frame].push_back(r.reproj_error_mm);
  }
  if (per_frame.empty()) fail(ErrorCode::EmptyInput, "no valid 3D records");
  ErrorSummary s;
  std::vector<double> marker_medians;
  for (auto& [lm, errs] : per_marker) marker_medians.push_back(median(errs));
  s.median_mm = median(marker_medians);
  int large = 0;
  for (auto& [frame, errs] : per_frame) large += median(errs) > threshold_mm;
  s.n_frames = static_cast<int>(per_frame.size());
  s.n_markers = static_cast<int>(per_marker.size());
  s.pct_large = 100.0 * large / s.n_frames;
  return s;
}

double large_error_threshold_mm(const std::string& body_part) {
  if (body_part == "right_hand" || body_part == "left_hand" || body_part == "face") return 10.0;
  if (body_part == "full_body") return 30.0;
  fail(ErrorCode::InvalidArgument, "unknown body part '" + body_part + "'");
}

double icc_a1(const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  const auto k = x.cols();
  if (n < 2 || k < 2) fail(ErrorCode::InvalidArgument, "ICC needs at least 2 subjects and 2 conditions");
  if (!x.allFinite()) fail(ErrorCode::InvalidArgument, "ICC ratings must be finite");
  const double grand = x.mean();
  const Eigen::VectorXd row_mean = x.rowwise().mean();
  const Eigen::RowVectorXd col_mean = x.colwise().mean();
  const double ss_rows = static_cast<double>(k) * (row_mean.array() - grand).square().sum();
  const double ss_cols = static_cast<double>(n) * (col_mean.array() - grand).square().sum();
  double ss_err = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      const double e = x(i, j) - row_mean[i] - col_mean[j] + grand;
      ss_err += e * e;
    }
  const double ms_r = ss_rows / static_cast<double>(n - 1);
  const double ms_c = ss_cols / static_cast<double>(k - 1);
  const double ms_e = ss_err / static_cast<double>((n - 1) * (k - 1));
  const double denom =
      ms_r + static_cast<double>(k - 1) * ms_e + static_cast<double>(k) / static_cast<double>(n) * (ms_c - ms_e);
  const double scale = std::max({std::abs(ms_r), std::abs(ms_c), std::abs(ms_e)});
  if (!(std::abs(denom) > 1e-14 * scale) || denom == 0.0) fail(ErrorCode::DegenerateVariance, "ratings carry no variance");
  return (ms_r - ms_e) / denom;
}

}  // namespace mvt
