#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mvt/calibration.hpp"
#include "mvt/metrics.hpp"
#include "mvt/sync_trim.hpp"

namespace mvt {

struct PipelineConfig {
  std::filesystem::path dataset_root;
  std::filesystem::path saving_dir;
  std::string body_part = "right_hand";
  std::string video_extension = ".mp4";
  std::string camera_suffix_pattern = "-cam([A-Z0-9])";
  double fps = 60.0;  // used when a trace or plan does not carry its own
  std::pair<int, int> image_size{1920, 1080};
  BoardSpec board;

  // trim
  int light_threshold = 200;
  int red_margin = 30;
  int pixel_threshold = 5;
  int debounce = 2;
  int num_trials = 1;
  std::optional<double> trial_length_s;
  int max_frame_skew = 2;
  std::map<std::string, RoiSpec> rois;

  // triangulate
  double min_confidence = 0.5;
  double inlier_threshold_px = 20.0;

  // metrics
  double dt_metrics = 0.005;
  int max_gap_frames = 5;
  CorrelationMode correlation_mode = CorrelationMode::PositionNorm;
  double large_error_hand_face_mm = 10.0;
  double large_error_body_mm = 30.0;

  void validate() const;
  double large_error_threshold() const;
  std::string schema() const;

  std::string to_json() const;
  // Relative paths in the file resolve against base_dir.
  static PipelineConfig from_json(const std::string& text, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);
  // Paths are written relative to the file's folder.
  void save(const std::filesystem::path& path) const;

  // Applies "key=value" style overrides (same keys as the JSON file, nested
  // keys joined with '.').
  void set(const std::string& key, const std::string& value);
};

enum class FileKind { Video, Detections, Trace, FrameStream };

struct TrialFile {
  std::string name;    // file name inside the trial directory
  std::string camera;  // id captured by the suffix pattern
  FileKind kind = FileKind::Video;
};

struct TrialEntry {
  std::string rel_path;  // generic '/'-separated path below the dataset root
  std::vector<TrialFile> files;
  std::set<std::string> cameras;
};

struct DatasetIndex {
  std::vector<TrialEntry> trials;
  std::vector<std::string> calibration_scopes;  // rel dirs owning a calibration/ folder

  std::string to_json() const;
  static DatasetIndex from_json(const std::string& text);
};

// Walks the dataset tree, validates naming and leaf contents, and mirrors
// the trial folders under <saving_dir>/videos-raw/.
DatasetIndex scan_dataset(const std::filesystem::path& root, const PipelineConfig& config);

enum class Step { Scan, Trim, Calibrate, Triangulate, Metrics, Features, Report };
const char* step_name(Step step);
Step parse_step(const std::string& name);

struct ManualTrim {
  int start = 0;
  std::optional<int> end;  // nullopt = last frame
  std::string trial_filter;  // rel path prefix; empty = every trial
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }

  DatasetIndex scan();
  void trim_auto();
  void trim_manual(const ManualTrim& manual);
  void calibrate();
  void triangulate();
  void metrics();
  void features();
  void report();
  void run(Step step);

  // Processing units below videos-raw/ for one trial (one per LED event).
  std::vector<std::string> trial_units(const TrialEntry& trial) const;

 private:
  DatasetIndex load_index(Step step) const;
  std::string calibration_scope(const std::string& trial_rel, const DatasetIndex& index) const;
  void write_trim_outputs(const TrialEntry& trial, const TrimPlan& plan, const std::string& mode);

  PipelineConfig config_;
};

}  // namespace mvt
