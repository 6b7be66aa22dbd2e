#include "mvt/sync_trim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "mvt/error.hpp"
#include "mvt/io.hpp"

namespace mvt {

std::vector<TrimWindow> TrimPlan::trial(int index) const {
  std::vector<TrimWindow> out;
  for (const auto& w : windows)
    if (w.trial_index == index) out.push_back(w);
  return out;
}

FrameStreamHeader read_frame_stream_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::StreamTruncated, "missing frame stream header");
  std::istringstream ss(line);
  FrameStreamHeader h;
  std::string format;
  if (!(ss >> h.width >> h.height >> h.fps >> format) || format != "rgb24")
    fail(ErrorCode::ParseError, "frame stream header must be 'W H FPS rgb24', got '" + line + "'");
  if (h.width < 1 || h.height < 1 || !(h.fps > 0.0))
    fail(ErrorCode::ParseError, "frame stream header has invalid dimensions or fps");
  return h;
}

IntensityTrace roi_red_counts(std::istream& stream, const RoiSpec& roi, const RedCountOptions& options) {
  if (options.light_threshold < 0 || options.light_threshold > 255)
    fail(ErrorCode::InvalidArgument, "light threshold must be within 0-255");
  const FrameStreamHeader h = read_frame_stream_header(stream);
  if (roi.w < 1 || roi.h < 1 || roi.x < 0 || roi.y < 0 || roi.x + roi.w > h.width || roi.y + roi.h > h.height)
    fail(ErrorCode::RoiOutOfBounds, "ROI for camera " + roi.camera + " exceeds the " + std::to_string(h.width) +
                                        "x" + std::to_string(h.height) + " frame");
  IntensityTrace trace{roi.camera, h.fps, {}};
  const std::size_t frame_bytes = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height) * 3;
  std::vector<unsigned char> frame(frame_bytes);
  while (true) {
    stream.read(reinterpret_cast<char*>(frame.data()), static_cast<std::streamsize>(frame_bytes));
    const auto got = static_cast<std::size_t>(stream.gcount());
    if (got == 0) break;
    if (got != frame_bytes)
      fail(ErrorCode::StreamTruncated, "frame " + std::to_string(trace.counts.size()) + " has " +
                                           std::to_string(got) + " of " + std::to_string(frame_bytes) + " bytes");
    int count = 0;
    for (int y = roi.y; y < roi.y + roi.h; ++y) {
      const unsigned char* row = frame.data() + (static_cast<std::size_t>(y) * h.width + roi.x) * 3;
      for (int x = 0; x < roi.w; ++x) {
        const int r = row[3 * x], g = row[3 * x + 1], b = row[3 * x + 2];
        if (r >= options.light_threshold && r - std::max(g, b) >= options.red_margin) ++count;
      }
    }
    trace.counts.push_back(count);
  }
  return trace;
}

std::vector<std::pair<int, int>> detect_events(const IntensityTrace& trace, int pixel_threshold, int debounce) {
  if (pixel_threshold < 1) fail(ErrorCode::InvalidArgument, "pixel threshold must be at least 1");
  debounce = std::max(debounce, 1);
  std::vector<std::pair<int, int>> events;
  const int n = static_cast<int>(trace.counts.size());
  int i = 0;
  while (i < n) {
    if (trace.counts[static_cast<std::size_t>(i)] < pixel_threshold) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && trace.counts[static_cast<std::size_t>(j + 1)] >= pixel_threshold) ++j;
    if (j - i + 1 >= debounce) events.emplace_back(i, j);
    i = j + 1;
  }
  return events;
}

TrimPlan plan_trims(const std::vector<IntensityTrace>& traces, const TrimOptions& options) {
  if (traces.empty()) fail(ErrorCode::EmptyInput, "no intensity traces");
  if (options.num_trials < 1) fail(ErrorCode::InvalidArgument, "num_trials must be at least 1");
  TrimPlan plan;
  plan.num_trials = options.num_trials;
  std::vector<std::vector<TrimWindow>> per_trial(static_cast<std::size_t>(options.num_trials));
  for (const auto& trace : traces) {
    if (!(trace.fps > 0.0)) fail(ErrorCode::InvalidArgument, "camera " + trace.camera + " has non-positive fps");
    plan.fps[trace.camera] = trace.fps;
    const auto events = detect_events(trace, options.pixel_threshold, options.debounce);
    if (static_cast<int>(events.size()) != options.num_trials)
      fail(ErrorCode::EventCountMismatch, "camera " + trace.camera + ": found " + std::to_string(events.size()) +
                                              " LED events, expected " + std::to_string(options.num_trials));
    for (int k = 0; k < options.num_trials; ++k) {
      auto [on, off] = events[static_cast<std::size_t>(k)];
      if (options.fixed_length_s) {
        off = on + static_cast<int>(std::lround(*options.fixed_length_s * trace.fps)) - 1;
        if (off < on) fail(ErrorCode::InvalidArgument, "fixed trial length is shorter than one frame");
        if (off >= static_cast<int>(trace.counts.size()))
          fail(ErrorCode::InvalidArgument, "camera " + trace.camera + ": fixed-length window for trial " +
                                               std::to_string(k) + " runs past the end of the recording");
      }
      per_trial[static_cast<std::size_t>(k)].push_back({trace.camera, on, off, k});
    }
  }
  for (int k = 0; k < options.num_trials; ++k) {
    const auto& ws = per_trial[static_cast<std::size_t>(k)];
    int lo = ws.front().end_frame - ws.front().start_frame, hi = lo;
    for (const auto& w : ws) {
      lo = std::min(lo, w.end_frame - w.start_frame);
      hi = std::max(hi, w.end_frame - w.start_frame);
    }
    if (hi - lo > options.max_frame_skew)
      fail(ErrorCode::SkewTooLarge, "trial " + std::to_string(k) + ": window lengths differ by " +
                                        std::to_string(hi - lo) + " frames");
    plan.windows.insert(plan.windows.end(), ws.begin(), ws.end());
  }
  return plan;
}

TrimWindow manual_window(int start, int end, const std::string& camera) {
  if (start < 0) fail(ErrorCode::InvalidArgument, "start frame must be non-negative");
  if (start > end)
    fail(ErrorCode::InvertedRange, "start " + std::to_string(start) + " is after end " + std::to_string(end));
  return {camera, start, end, 0};
}

IntensityTrace read_trace_csv(const std::filesystem::path& path, const std::string& camera, double fps) {
  const auto table = io::read_csv(path, {"frame", "count"});
  const auto iframe = table.column("frame"), icount = table.column("count");
  IntensityTrace trace{camera, fps, {}};
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto frame = io::parse_int(table.rows[r][iframe]);
    const auto count = io::parse_int(table.rows[r][icount]);
    if (frame != static_cast<long long>(r))
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(table.line_numbers[r]) +
                                      ": frames must be consecutive from 0");
    if (count < 0) fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(table.line_numbers[r]) +
                                                   ": negative count");
    trace.counts.push_back(static_cast<int>(count));
  }
  return trace;
}

std::string format_trace_csv(const IntensityTrace& trace) {
  std::string out = "frame,count\n";
  for (std::size_t i = 0; i < trace.counts.size(); ++i)
    out += std::to_string(i) + "," + std::to_string(trace.counts[i]) + "\n";
  return out;
}

std::string format_trim_plan(const TrimPlan& plan, const std::string& mode) {
  nlohmann::ordered_json j;
  j["trials"] = nlohmann::ordered_json::array();
  for (int k = 0; k < plan.num_trials; ++k) {
    nlohmann::ordered_json t;
    t["index"] = k;
    t["windows"] = nlohmann::ordered_json::array();
    for (const auto& w : plan.trial(k))
      t["windows"].push_back({{"camera", w.camera}, {"start", w.start_frame}, {"end", w.end_frame}});
    j["trials"].push_back(t);
  }
  j["fps"] = nlohmann::ordered_json::object();
  for (const auto& [cam, fps] : plan.fps) j["fps"][cam] = fps;
  j["metadata"] = {{"mode", mode}, {"end_frame", "last_on_inclusive"}, {"time_zero", "per_camera_start_frame"}};
  return j.dump(2) + "\n";
}

TrimPlan parse_trim_plan(const std::string& json_text) {
  TrimPlan plan;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("trim plan: ") + e.what());
  }
  try {
    for (const auto& t : j.at("trials")) {
      const int index = t.at("index").get<int>();
      plan.num_trials = std::max(plan.num_trials, index + 1);
      for (const auto& w : t.at("windows"))
        plan.windows.push_back({w.at("camera").get<std::string>(), w.at("start").get<int>(), w.at("end").get<int>(), index});
    }
    for (const auto& [cam, fps] : j.at("fps").items()) plan.fps[cam] = fps.get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("trim plan: ") + e.what());
  }
  return plan;
}

}  // namespace mvt
