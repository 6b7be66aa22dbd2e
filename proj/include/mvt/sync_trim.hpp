#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mvt {

struct RoiSpec {
  std::string camera;
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;
};

struct IntensityTrace {
  std::string camera;
  double fps = 30.0;
  std::vector<int> counts;  // per frame: ROI pixels judged "LED on"
};

struct TrimWindow {
  std::string camera;
  int start_frame = 0;  // inclusive
  int end_frame = 0;    // inclusive
  int trial_index = 0;
};

struct TrimPlan {
  std::vector<TrimWindow> windows;  // ordered by trial, then camera
  std::map<std::string, double> fps;
  int num_trials = 0;

  std::vector<TrimWindow> trial(int index) const;
};

struct RedCountOptions {
  int light_threshold = 200;  // 0-255, red channel
  int red_margin = 30;        // red - max(green, blue)
};

struct FrameStreamHeader {
  int width = 0;
  int height = 0;
  double fps = 0.0;
};

// Reads "W H FPS rgb24\n" followed by W*H*3-byte RGB frames.
FrameStreamHeader read_frame_stream_header(std::istream& in);

// Counts red-dominant bright pixels inside the ROI of every frame.
// Throws RoiOutOfBounds or StreamTruncated.
IntensityTrace roi_red_counts(std::istream& stream, const RoiSpec& roi, const RedCountOptions& options = {});

// ON episodes as (first, last) frame pairs: runs of counts >= pixel_threshold
// lasting at least `debounce` frames.
std::vector<std::pair<int, int>> detect_events(const IntensityTrace& trace, int pixel_threshold, int debounce);

struct TrimOptions {
  int num_trials = 1;
  std::optional<double> fixed_length_s;
  int pixel_threshold = 5;
  int debounce = 2;
  int max_frame_skew = 2;
};

TrimPlan plan_trims(const std::vector<IntensityTrace>& traces, const TrimOptions& options = {});

TrimWindow manual_window(int start, int end, const std::string& camera);

// Trace CSV: frame,count
IntensityTrace read_trace_csv(const std::filesystem::path& path, const std::string& camera, double fps);
std::string format_trace_csv(const IntensityTrace& trace);

// Trim plan JSON: {trials:[{index, windows:[{camera,start,end}]}], fps:{...}, metadata:{...}}
std::string format_trim_plan(const TrimPlan& plan, const std::string& mode);
TrimPlan parse_trim_plan(const std::string& json_text);

}  // namespace mvt
