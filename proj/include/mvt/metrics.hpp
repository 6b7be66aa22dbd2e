#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvt/trajectory.hpp"
#include "mvt/triangulation.hpp"

namespace mvt {

double median(std::vector<double> values);
double pearson(std::span<const double> x, std::span<const double> y);

enum class CorrelationMode { PositionNorm, DisplacementNorm };
const char* correlation_mode_name(CorrelationMode mode);
CorrelationMode parse_correlation_mode(const std::string& name);

// Lag-one Pearson correlation of a marker's magnitude series, skipping pairs
// that touch a direction reversal or a missing sample. Throws ZeroVariance.
double marker_interframe_correlation(const Trajectory3D& traj, CorrelationMode mode = CorrelationMode::PositionNorm);

struct MarkerAggregate {
  double value = 0.0;            // median over usable markers
  std::vector<double> per_marker;
  int excluded = 0;              // markers rejected (stationary, too short, ...)
};

MarkerAggregate interframe_correlation(const std::vector<Trajectory3D>& trajs,
                                       CorrelationMode mode = CorrelationMode::PositionNorm);

// ln(T^5 / L^2 * integral |jerk|^2 dt) over the whole series or [t1, t2].
double ldj(const Trajectory3D& traj, std::optional<std::pair<double, double>> window = std::nullopt);

MarkerAggregate ldj_median(const std::vector<Trajectory3D>& trajs);

struct ErrorSummary {
  double median_mm = 0.0;
  double pct_large = 0.0;
  int n_frames = 0;
  int n_markers = 0;
};

ErrorSummary error_summary(const std::vector<Point3DRecord>& records, double threshold_mm);

// Default large-error threshold for a body part: 10 mm for hands and face,
// 30 mm for elbows and shoulders (full body).
double large_error_threshold_mm(const std::string& body_part);

// Two-way absolute-agreement single-measure ICC; rows are subjects, columns
// conditions. Throws DegenerateVariance.
double icc_a1(const Eigen::MatrixXd& ratings);

}  // namespace mvt
