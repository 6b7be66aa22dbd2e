#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mvt/calibration.hpp"

namespace mvt {

// calibration.toml layout: [metadata] with rms_error_px and unit_scale, then
// one [cam_N] table per camera in rig order holding name, size, matrix,
// distortions, rotation and translation.
std::string format_calibration(const CalibrationResult& result);
void write_calibration(const CalibrationResult& result, const std::filesystem::path& path);

// Parse errors carry the line number; missing or malformed keys are
// SchemaError naming "<table>.<key>".
CalibrationResult parse_calibration(std::string_view text, const std::string& source_name = "calibration.toml");
CameraRig read_calibration(const std::filesystem::path& path);
CalibrationResult read_calibration_result(const std::filesystem::path& path);

}  // namespace mvt
