#include "mvt/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <regex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mvt/calibration_file.hpp"
#include "mvt/error.hpp"
#include "mvt/features.hpp"
#include "mvt/io.hpp"
#include "mvt/trajectory.hpp"
#include "mvt/triangulation.hpp"

namespace mvt {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

const char* kIndexFile = "dataset_index.json";
const char* kFrameDecoderEnv = "MVT_FRAME_DECODER";

std::string join_rel(const std::string& a, const std::string& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  return a + "/" + b;
}

std::vector<std::string> path_parts(const std::string& rel) {
  std::vector<std::string> out;
  for (auto& p : io::split(rel, '/'))
    if (!p.empty()) out.push_back(p);
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

ordered_json parse_json(const std::string& text, const std::string& source) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, source + ": " + e.what());
  }
}

// Strips the "<CodeName>: " prefix so a message can be re-raised with context.
std::string bare_message(const Error& e) {
  const std::string what = e.what();
  const std::string prefix = std::string(error_code_name(e.code())) + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

// Runs fn(i) for i in [0, n) on a small worker pool. The error of the
// lowest failing index is rethrown, tagged with its label.
void for_each_parallel(std::size_t n, const std::function<std::string(std::size_t)>& label,
                       const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::min(4u, std::thread::hardware_concurrency())));
  std::vector<std::optional<Error>> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const Error& e) {
        errors[i] = Error(e.code(), label(i) + ": " + bare_message(e));
      } catch (const std::exception& e) {
        errors[i] = Error(ErrorCode::IoError, label(i) + ": " + e.what());
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) throw *e;
}

// Every step output carries a sidecar listing content hashes of what it was
// built from. Keys are paths relative to the saving directory, or
// "dataset:<rel>" for files under the dataset root. "upstream" names the
// sidecars of the inputs so currency is checked along the whole chain.
struct Provenance {
  fs::path saving;
  fs::path dataset;

  fs::path resolve(const std::string& key) const {
    if (key.rfind("dataset:", 0) == 0) return dataset / key.substr(8);
    return saving / key;
  }

  std::string hash(const std::string& key) const { return io::file_hash(resolve(key)); }

  void write(const std::string& meta_key, const std::string& step, const std::vector<std::string>& inputs,
             const std::vector<std::string>& outputs, ordered_json extra = ordered_json::object(),
             const std::vector<std::string>& upstream = {}) const {
    ordered_json meta;
    meta["step"] = step;
    meta["inputs"] = ordered_json::object();
    for (const auto& k : inputs) meta["inputs"][k] = hash(k);
    meta["outputs"] = ordered_json::object();
    for (const auto& k : outputs) meta["outputs"][k] = hash(k);
    meta["parameters"] = std::move(extra);
    meta["upstream"] = upstream;
    io::write_text(resolve(meta_key), meta.dump(2) + "\n");
  }

  // The sidecar, or nullopt when it is missing or any recorded file changed.
  std::optional<ordered_json> current(const std::string& meta_key) const {
    const fs::path p = resolve(meta_key);
    if (!fs::exists(p)) return std::nullopt;
    ordered_json meta;
    try {
      meta = ordered_json::parse(io::read_text(p));
    } catch (const std::exception&) {
      return std::nullopt;
    }
    for (const char* section : {"inputs", "outputs"}) {
      if (!meta.contains(section) || !meta[section].is_object()) return std::nullopt;
      for (const auto& [k, v] : meta[section].items()) {
        const fs::path f = resolve(k);
        if (!fs::exists(f) || io::file_hash(f) != v.get<std::string>()) return std::nullopt;
      }
    }
    if (meta.contains("upstream"))
      for (const auto& k : meta["upstream"])
        if (!current(k.get<std::string>())) return std::nullopt;
    return meta;
  }
};

void require_current(const Provenance& prov, const std::string& meta_key, Step step, const std::string& artifact) {
  if (!prov.current(meta_key)) {
    const bool exists = fs::exists(prov.resolve(artifact));
    fail(ErrorCode::MissingPrerequisite,
         std::string(step_name(step)) + " needs " + artifact + (exists ? " (stale: inputs changed since it was built)" : ""));
  }
}

std::optional<double> try_metric(const std::function<double()>& fn) {
  try {
    const double v = fn();
    if (std::isfinite(v)) return v;
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::ZeroVariance:
      case ErrorCode::DegenerateZeroJerk:
      case ErrorCode::ZeroPath:
      case ErrorCode::TooShort:
      case ErrorCode::ContainsGaps:
      case ErrorCode::EmptyInput:
        break;
      default:
        throw;
    }
  }
  return std::nullopt;
}

ordered_json opt_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<double> json_opt(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

// Longest run of present samples, for measures that cannot span gaps.
Trajectory3D longest_present_run(const Trajectory3D& traj) {
  std::size_t best_start = 0, best_len = 0;
  for (std::size_t i = 0; i < traj.size();) {
    if (!traj.p[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < traj.size() && traj.p[j]) ++j;
    if (j - i > best_len) {
      best_len = j - i;
      best_start = i;
    }
    i = j;
  }
  Trajectory3D out;
  out.landmark_id = traj.landmark_id;
  out.source_fps = traj.source_fps;
  out.t.assign(traj.t.begin() + best_start, traj.t.begin() + best_start + best_len);
  out.p.assign(traj.p.begin() + best_start, traj.p.begin() + best_start + best_len);
  return out;
}

struct TrialLabels {
  std::string subject;
  std::string condition;
};

TrialLabels labels_for(const std::string& trial_rel) {
  const auto parts = path_parts(trial_rel);
  TrialLabels l;
  l.subject = parts.empty() ? "" : parts.front();
  l.condition = parts.size() >= 3 ? parts[1] : "default";
  return l;
}

std::string read_decoder_stream(const std::string& templ, const fs::path& input) {
  std::string quoted = "'";
  for (char c : input.string()) quoted += (c == '\'') ? std::string("'\\''") : std::string(1, c);
  quoted += "'";
  std::string cmd = templ;
  const auto pos = cmd.find("{input}");
  if (pos == std::string::npos) fail(ErrorCode::InvalidArgument, std::string(kFrameDecoderEnv) + " lacks {input}");
  cmd.replace(pos, 7, quoted);
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) fail(ErrorCode::IoError, "cannot start frame decoder");
  std::string data;
  char buf[1 << 16];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) data.append(buf, got);
  if (pclose(pipe) != 0) fail(ErrorCode::IoError, "frame decoder failed for " + input.filename().string());
  return data;
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return std::nan("");
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

// ---------------------------------------------------------------- config

void PipelineConfig::validate() const {
  static const std::set<std::string> parts{"right_hand", "left_hand", "full_body", "face"};
  if (!parts.count(body_part)) fail(ErrorCode::InvalidArgument, "body_part must be right_hand, left_hand, full_body or face");
  if (saving_dir.empty()) fail(ErrorCode::InvalidArgument, "saving_dir is required");
  if (video_extension.size() < 2 || video_extension[0] != '.')
    fail(ErrorCode::InvalidArgument, "video_extension must look like \".mp4\"");
  try {
    std::regex re(camera_suffix_pattern);
    if (re.mark_count() != 1)
      fail(ErrorCode::InvalidArgument, "camera_suffix_pattern needs exactly one capture group");
  } catch (const std::regex_error&) {
    fail(ErrorCode::InvalidArgument, "camera_suffix_pattern is not a valid regular expression");
  }
  if (!(fps > 0.0)) fail(ErrorCode::InvalidArgument, "fps must be positive");
  if (image_size.first < 1 || image_size.second < 1) fail(ErrorCode::InvalidArgument, "image_size must be positive");
  board.validate();
  if (light_threshold < 0 || light_threshold > 255) fail(ErrorCode::InvalidArgument, "light_threshold must be in [0, 255]");
  if (red_margin < 0 || red_margin > 255) fail(ErrorCode::InvalidArgument, "red_margin must be in [0, 255]");
  if (pixel_threshold < 1) fail(ErrorCode::InvalidArgument, "pixel_threshold must be >= 1");
  if (debounce < 1) fail(ErrorCode::InvalidArgument, "debounce must be >= 1");
  if (num_trials < 1) fail(ErrorCode::InvalidArgument, "num_trials must be >= 1");
  if (trial_length_s && !(*trial_length_s > 0.0)) fail(ErrorCode::InvalidArgument, "trial_length_s must be positive");
  if (max_frame_skew < 0) fail(ErrorCode::InvalidArgument, "max_frame_skew must be >= 0");
  for (const auto& [cam, roi] : rois)
    if (roi.x < 0 || roi.y < 0 || roi.w < 1 || roi.h < 1) fail(ErrorCode::InvalidArgument, "bad ROI for camera " + cam);
  if (min_confidence < 0.0 || min_confidence > 1.0) fail(ErrorCode::InvalidArgument, "min_confidence must be in [0, 1]");
  if (!(inlier_threshold_px > 0.0)) fail(ErrorCode::InvalidArgument, "inlier_threshold_px must be positive");
  if (!(dt_metrics > 0.0) || dt_metrics > 1.0) fail(ErrorCode::InvalidArgument, "metrics dt must be in (0, 1] s");
  if (max_gap_frames < 0) fail(ErrorCode::InvalidArgument, "max_gap_frames must be >= 0");
  if (!(large_error_hand_face_mm > 0.0) || !(large_error_body_mm > 0.0))
    fail(ErrorCode::InvalidArgument, "large-error thresholds must be positive");
}

double PipelineConfig::large_error_threshold() const {
  return body_part == "full_body" ? large_error_body_mm : large_error_hand_face_mm;
}

std::string PipelineConfig::schema() const { return schema_for_body_part(body_part); }

std::string PipelineConfig::to_json() const {
  ordered_json j;
  j["dataset_root"] = dataset_root.generic_string();
  j["saving_dir"] = saving_dir.generic_string();
  j["body_part"] = body_part;
  j["video_extension"] = video_extension;
  j["camera_suffix_pattern"] = camera_suffix_pattern;
  j["fps"] = fps;
  j["image_size"] = {image_size.first, image_size.second};
  j["board"] = {{"squares_x", board.squares_x},
                {"squares_y", board.squares_y},
                {"square_length_mm", board.square_length_mm},
                {"marker_length_mm", board.marker_length_mm}};
  ordered_json trim;
  trim["light_threshold"] = light_threshold;
  trim["red_margin"] = red_margin;
  trim["pixel_threshold"] = pixel_threshold;
  trim["debounce"] = debounce;
  trim["num_trials"] = num_trials;
  trim["trial_length_s"] = opt_json(trial_length_s);
  trim["max_frame_skew"] = max_frame_skew;
  trim["rois"] = ordered_json::object();
  for (const auto& [cam, r] : rois) trim["rois"][cam] = {r.x, r.y, r.w, r.h};
  j["trim"] = trim;
  j["triangulation"] = {{"min_confidence", min_confidence}, {"inlier_threshold_px", inlier_threshold_px}};
  j["metrics"] = {{"dt", dt_metrics},
                  {"max_gap_frames", max_gap_frames},
                  {"correlation_mode", correlation_mode_name(correlation_mode)},
                  {"large_error_mm", {{"hand_face", large_error_hand_face_mm}, {"body", large_error_body_mm}}}};
  return j.dump(2) + "\n";
}

PipelineConfig PipelineConfig::from_json(const std::string& text, const fs::path& base_dir) {
  const ordered_json j = parse_json(text, "config");
  if (!j.is_object()) fail(ErrorCode::SchemaError, "config must be a JSON object");
  PipelineConfig c;
  try {
    auto path_of = [&](const char* key) -> fs::path {
      if (!j.contains(key)) return {};
      fs::path p = j[key].get<std::string>();
      return (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
    };
    c.dataset_root = path_of("dataset_root");
    c.saving_dir = path_of("saving_dir");
    if (j.contains("body_part")) c.body_part = j["body_part"].get<std::string>();
    if (j.contains("video_extension")) c.video_extension = j["video_extension"].get<std::string>();
    if (j.contains("camera_suffix_pattern")) c.camera_suffix_pattern = j["camera_suffix_pattern"].get<std::string>();
    if (j.contains("fps")) c.fps = j["fps"].get<double>();
    if (j.contains("image_size")) c.image_size = {j["image_size"].at(0).get<int>(), j["image_size"].at(1).get<int>()};
    if (j.contains("board")) {
      const auto& b = j["board"];
      c.board.squares_x = b.value("squares_x", c.board.squares_x);
      c.board.squares_y = b.value("squares_y", c.board.squares_y);
      c.board.square_length_mm = b.value("square_length_mm", c.board.square_length_mm);
      c.board.marker_length_mm = b.value("marker_length_mm", c.board.marker_length_mm);
    }
    if (j.contains("trim")) {
      const auto& t = j["trim"];
      c.light_threshold = t.value("light_threshold", c.light_threshold);
      c.red_margin = t.value("red_margin", c.red_margin);
      c.pixel_threshold = t.value("pixel_threshold", c.pixel_threshold);
      c.debounce = t.value("debounce", c.debounce);
      c.num_trials = t.value("num_trials", c.num_trials);
      if (t.contains("trial_length_s") && !t["trial_length_s"].is_null())
        c.trial_length_s = t["trial_length_s"].get<double>();
      c.max_frame_skew = t.value("max_frame_skew", c.max_frame_skew);
      if (t.contains("rois"))
        for (const auto& [cam, r] : t["rois"].items())
          c.rois[cam] = RoiSpec{cam, r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>(), r.at(3).get<int>()};
    }
    if (j.contains("triangulation")) {
      const auto& t = j["triangulation"];
      c.min_confidence = t.value("min_confidence", c.min_confidence);
      c.inlier_threshold_px = t.value("inlier_threshold_px", c.inlier_threshold_px);
    }
    if (j.contains("metrics")) {
      const auto& m = j["metrics"];
      c.dt_metrics = m.value("dt", c.dt_metrics);
      c.max_gap_frames = m.value("max_gap_frames", c.max_gap_frames);
      if (m.contains("correlation_mode"))
        c.correlation_mode = parse_correlation_mode(m["correlation_mode"].get<std::string>());
      if (m.contains("large_error_mm")) {
        c.large_error_hand_face_mm = m["large_error_mm"].value("hand_face", c.large_error_hand_face_mm);
        c.large_error_body_mm = m["large_error_mm"].value("body", c.large_error_body_mm);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  return from_json(io::read_text(path), path.parent_path());
}

void PipelineConfig::save(const fs::path& path) const {
  validate();
  // load() resolves paths against the file's folder, so store them that way.
  PipelineConfig copy = *this;
  const fs::path base = fs::absolute(path).parent_path();
  for (fs::path* p : {&copy.dataset_root, &copy.saving_dir}) {
    const fs::path rel = fs::absolute(*p).lexically_normal().lexically_relative(base);
    if (!rel.empty()) *p = rel;
  }
  io::write_text(path, copy.to_json());
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  ordered_json j = ordered_json::parse(to_json());
  ordered_json* node = &j;
  const auto keys = io::split(key, '.');
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->contains(keys[i]) || !(*node)[keys[i]].is_object())
      fail(ErrorCode::InvalidArgument, "unknown config key " + key);
    node = &(*node)[keys[i]];
  }
  const bool nested_map = keys.size() == 3 && keys[0] == "trim" && keys[1] == "rois";
  if (!nested_map && !node->contains(keys.back())) fail(ErrorCode::InvalidArgument, "unknown config key " + key);
  ordered_json v;
  try {
    v = ordered_json::parse(value);
  } catch (const nlohmann::json::exception&) {
    v = value;
  }
  (*node)[keys.back()] = v;
  *this = from_json(j.dump(), {});
}

// ---------------------------------------------------------------- index

std::string DatasetIndex::to_json() const {
  ordered_json j;
  j["trials"] = ordered_json::array();
  for (const auto& t : trials) {
    ordered_json e;
    e["path"] = t.rel_path;
    e["cameras"] = t.cameras;
    e["files"] = ordered_json::array();
    for (const auto& f : t.files) {
      static const char* kinds[] = {"video", "detections", "trace", "frame_stream"};
      e["files"].push_back({{"name", f.name}, {"camera", f.camera}, {"kind", kinds[static_cast<int>(f.kind)]}});
    }
    j["trials"].push_back(e);
  }
  j["calibration_scopes"] = calibration_scopes;
  return j.dump(2) + "\n";
}

DatasetIndex DatasetIndex::from_json(const std::string& text) {
  const ordered_json j = parse_json(text, kIndexFile);
  DatasetIndex idx;
  try {
    for (const auto& e : j.at("trials")) {
      TrialEntry t;
      t.rel_path = e.at("path").get<std::string>();
      for (const auto& c : e.at("cameras")) t.cameras.insert(c.get<std::string>());
      for (const auto& f : e.at("files")) {
        const std::string kind = f.at("kind").get<std::string>();
        FileKind k = kind == "video"        ? FileKind::Video
                     : kind == "detections" ? FileKind::Detections
                     : kind == "trace"      ? FileKind::Trace
                                            : FileKind::FrameStream;
        t.files.push_back({f.at("name").get<std::string>(), f.at("camera").get<std::string>(), k});
      }
      idx.trials.push_back(std::move(t));
    }
    for (const auto& s : j.at("calibration_scopes")) idx.calibration_scopes.push_back(s.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, std::string(kIndexFile) + ": " + e.what());
  }
  return idx;
}

DatasetIndex scan_dataset(const fs::path& root, const PipelineConfig& config) {
  config.validate();
  if (!fs::is_directory(root)) fail(ErrorCode::IoError, "dataset root " + root.string() + " is not a directory");
  const std::regex suffix(config.camera_suffix_pattern + "$");
  const std::string video_ext = lower(config.video_extension);
  std::error_code ec;
  const fs::path saving_canon = fs::weakly_canonical(config.saving_dir, ec);

  DatasetIndex idx;
  std::function<void(const fs::path&, const std::string&)> walk = [&](const fs::path& dir, const std::string& rel) {
    std::vector<fs::directory_entry> entries(fs::directory_iterator(dir), fs::directory_iterator{});
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.path().filename() < b.path().filename(); });
    TrialEntry trial;
    trial.rel_path = rel;
    for (const auto& e : entries) {
      const std::string name = e.path().filename().string();
      if (name.empty() || name[0] == '.') continue;
      if (e.is_directory()) {
        if (!saving_canon.empty() && fs::weakly_canonical(e.path(), ec) == saving_canon) continue;
        if (name == "calibration") {
          idx.calibration_scopes.push_back(rel);
          continue;
        }
        walk(e.path(), join_rel(rel, name));
        continue;
      }
      if (!e.is_regular_file()) continue;
      const std::string lname = lower(name);
      FileKind kind;
      std::string stem;
      if (ends_with(lname, ".trace.csv")) {
        kind = FileKind::Trace;
        stem = name.substr(0, name.size() - 10);
      } else if (ends_with(lname, ".csv")) {
        kind = FileKind::Detections;
        stem = name.substr(0, name.size() - 4);
      } else if (ends_with(lname, ".rgb24")) {
        kind = FileKind::FrameStream;
        stem = name.substr(0, name.size() - 6);
      } else if (ends_with(lname, video_ext)) {
        kind = FileKind::Video;
        stem = name.substr(0, name.size() - video_ext.size());
      } else {
        fail(ErrorCode::NonVideoInLeaf, join_rel(rel, name) + " is not a video or detection file");
      }
      std::smatch m;
      if (!std::regex_search(stem, m, suffix) || !m[1].matched || m[1].length() == 0)
        fail(ErrorCode::SuffixMismatch, join_rel(rel, name) + " does not end with the camera suffix " +
                                            config.camera_suffix_pattern);
      trial.files.push_back({name, m[1].str(), kind});
      trial.cameras.insert(m[1].str());
    }
    if (!trial.files.empty()) idx.trials.push_back(std::move(trial));
  };
  walk(root, "");

  if (idx.trials.empty()) fail(ErrorCode::EmptyInput, "no trial folders under " + root.string());
  for (const auto& t : idx.trials) {
    if (t.cameras != idx.trials.front().cameras) {
      std::string have, want;
      for (const auto& c : t.cameras) have += c;
      for (const auto& c : idx.trials.front().cameras) want += c;
      fail(ErrorCode::CameraSetInconsistent,
           (t.rel_path.empty() ? std::string(".") : t.rel_path) + " has cameras {" + have + "}, expected {" + want + "}");
    }
    for (const auto& cam : t.cameras) {
      int dets = 0;
      for (const auto& f : t.files) dets += (f.camera == cam && f.kind == FileKind::Detections);
      if (dets > 1) fail(ErrorCode::InvalidArgument, t.rel_path + ": several detection files for camera " + cam);
    }
  }

  for (const auto& t : idx.trials) fs::create_directories(config.saving_dir / "videos-raw" / t.rel_path);
  io::write_text(config.saving_dir / kIndexFile, idx.to_json());
  return idx;
}

// ---------------------------------------------------------------- steps

const char* step_name(Step step) {
  switch (step) {
    case Step::Scan: return "scan";
    case Step::Trim: return "trim";
    case Step::Calibrate: return "calibrate";
    case Step::Triangulate: return "triangulate";
    case Step::Metrics: return "metrics";
    case Step::Features: return "features";
    case Step::Report: return "report";
  }
  return "?";
}

Step parse_step(const std::string& name) {
  for (Step s : {Step::Scan, Step::Trim, Step::Calibrate, Step::Triangulate, Step::Metrics, Step::Features, Step::Report})
    if (name == step_name(s)) return s;
  fail(ErrorCode::InvalidArgument, "unknown step " + name);
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
  config_.validate();
  std::error_code ec;
  fs::create_directories(config_.saving_dir, ec);
  if (ec || !fs::is_directory(config_.saving_dir))
    fail(ErrorCode::IoError, "cannot create saving_dir " + config_.saving_dir.string());
}

DatasetIndex Pipeline::scan() { return scan_dataset(config_.dataset_root, config_); }

DatasetIndex Pipeline::load_index(Step step) const {
  const fs::path p = config_.saving_dir / kIndexFile;
  if (!fs::exists(p)) fail(ErrorCode::MissingPrerequisite, std::string(step_name(step)) + " needs " + kIndexFile + " (run scan)");
  return DatasetIndex::from_json(io::read_text(p));
}

std::string Pipeline::calibration_scope(const std::string& trial_rel, const DatasetIndex& index) const {
  auto parts = path_parts(trial_rel);
  while (true) {
    std::string rel;
    for (const auto& p : parts) rel = join_rel(rel, p);
    if (std::find(index.calibration_scopes.begin(), index.calibration_scopes.end(), rel) != index.calibration_scopes.end())
      return rel;
    if (parts.empty()) break;
    parts.pop_back();
  }
  fail(ErrorCode::MissingPrerequisite, "triangulate needs calibration/calibration.toml (no calibration folder above " +
                                           trial_rel + ")");
}

std::vector<std::string> Pipeline::trial_units(const TrialEntry& trial) const {
  const fs::path plan_path = config_.saving_dir / "videos-raw" / trial.rel_path / "trim_plan.json";
  if (!fs::exists(plan_path))
    fail(ErrorCode::MissingPrerequisite, "needs " + join_rel("videos-raw/" + trial.rel_path, "trim_plan.json"));
  const TrimPlan plan = parse_trim_plan(io::read_text(plan_path));
  std::vector<std::string> units;
  if (plan.num_trials <= 1) return {trial.rel_path};
  for (int k = 0; k < plan.num_trials; ++k) units.push_back(join_rel(trial.rel_path, "event_" + std::to_string(k + 1)));
  return units;
}

void Pipeline::write_trim_outputs(const TrialEntry& trial, const TrimPlan& plan, const std::string& mode) {
  const Provenance prov{config_.saving_dir, config_.dataset_root};
  const std::string raw_rel = join_rel("videos-raw", trial.rel_path);
  const fs::path raw_dir = config_.saving_dir / raw_rel;

  // Drop outputs of an earlier trim so a changed trial count leaves no
  // orphaned event folders behind.
  if (fs::exists(raw_dir)) {
    std::vector<fs::path> stale;
    for (const auto& e : fs::directory_iterator(raw_dir)) {
      const std::string n = e.path().filename().string();
      if ((e.is_directory() && n.rfind("event_", 0) == 0) || (e.is_regular_file() && (ends_with(n, ".csv") || ends_with(n, ".json"))))
        stale.push_back(e.path());
    }
    for (const auto& p : stale) fs::remove_all(p);
  }

  std::vector<std::string> inputs, outputs;
  for (const auto& f : trial.files)
    if (f.kind != FileKind::Video) inputs.push_back("dataset:" + join_rel(trial.rel_path, f.name));

  const std::string schema = config_.schema();
  for (const auto& f : trial.files) {
    if (f.kind != FileKind::Detections) continue;
    const Detections2D det = read_detections_csv(config_.dataset_root / trial.rel_path / f.name, f.camera, schema);
    for (int k = 0; k < plan.num_trials; ++k) {
      const auto windows = plan.trial(k);
      const auto w = std::find_if(windows.begin(), windows.end(), [&](const TrimWindow& x) { return x.camera == f.camera; });
      if (w == windows.end()) fail(ErrorCode::InvalidArgument, "trim plan has no window for camera " + f.camera);
      Detections2D cut{det.camera, det.landmark_schema, {}};
      for (const auto& r : det.rows)
        if (r.frame >= w->start_frame && r.frame <= w->end_frame) {
          DetectionRow row = r;
          row.frame -= w->start_frame;
          cut.rows.push_back(row);
        }
      const std::string unit_rel = plan.num_trials <= 1 ? raw_rel : join_rel(raw_rel, "event_" + std::to_string(k + 1));
      const std::string out_key = join_rel(unit_rel, f.name);
      io::write_text(config_.saving_dir / out_key, format_detections_csv(cut));
      outputs.push_back(out_key);
    }
  }
  const std::string plan_key = join_rel(raw_rel, "trim_plan.json");
  io::write_text(config_.saving_dir / plan_key, format_trim_plan(plan, mode));
  outputs.push_back(plan_key);
  prov.write(join_rel(raw_rel, "trim_plan.meta.json"), "trim", inputs, outputs, {{"mode", mode}});
}

void Pipeline::trim_auto() {
  const DatasetIndex index = load_index(Step::Trim);
  TrimOptions opts;
  opts.num_trials = config_.num_trials;
  opts.fixed_length_s = config_.trial_length_s;
  opts.pixel_threshold = config_.pixel_threshold;
  opts.debounce = config_.debounce;
  opts.max_frame_skew = config_.max_frame_skew;
  RedCountOptions red{config_.light_threshold, config_.red_margin};

  for_each_parallel(
      index.trials.size(), [&](std::size_t i) { return index.trials[i].rel_path; },
      [&](std::size_t i) {
        const TrialEntry& trial = index.trials[i];
        std::vector<IntensityTrace> traces;
        for (const auto& cam : trial.cameras) {
          auto find = [&](FileKind k) -> const TrialFile* {
            for (const auto& f : trial.files)
              if (f.camera == cam && f.kind == k) return &f;
            return nullptr;
          };
          const fs::path dir = config_.dataset_root / trial.rel_path;
          auto roi_for = [&]() {
            const auto it = config_.rois.find(cam);
            if (it == config_.rois.end()) fail(ErrorCode::InvalidArgument, "no LED ROI configured for camera " + cam);
            RoiSpec roi = it->second;
            roi.camera = cam;
            return roi;
          };
          IntensityTrace trace;
          if (const auto* f = find(FileKind::Trace)) {
            trace = read_trace_csv(dir / f->name, cam, config_.fps);
          } else if (const auto* s = find(FileKind::FrameStream)) {
            std::ifstream in(dir / s->name, std::ios::binary);
            if (!in) fail(ErrorCode::IoError, "cannot open " + s->name);
            trace = roi_red_counts(in, roi_for(), red);
          } else if (const auto* v = find(FileKind::Video)) {
            const char* templ = std::getenv(kFrameDecoderEnv);
            if (!templ || !*templ)
              fail(ErrorCode::MissingPrerequisite, std::string("trim needs ") + kFrameDecoderEnv + " to decode " + v->name);
            std::istringstream in(read_decoder_stream(templ, dir / v->name));
            trace = roi_red_counts(in, roi_for(), red);
          } else {
            fail(ErrorCode::MissingPrerequisite, "trim needs an LED trace, frame stream or video for camera " + cam);
          }
          trace.camera = cam;
          traces.push_back(std::move(trace));
        }
        write_trim_outputs(trial, plan_trims(traces, opts), "auto");
      });
}

void Pipeline::trim_manual(const ManualTrim& manual) {
  const DatasetIndex index = load_index(Step::Trim);
  std::vector<const TrialEntry*> selected;
  for (const auto& t : index.trials)
    if (manual.trial_filter.empty() || t.rel_path == manual.trial_filter ||
        t.rel_path.rfind(manual.trial_filter + "/", 0) == 0)
      selected.push_back(&t);
  if (selected.empty()) fail(ErrorCode::InvalidArgument, "no trial matches " + manual.trial_filter);

  for_each_parallel(
      selected.size(), [&](std::size_t i) { return selected[i]->rel_path; },
      [&](std::size_t i) {
        const TrialEntry& trial = *selected[i];
        int end = manual.end.value_or(-1);
        if (!manual.end) {
          std::optional<int> last;
          for (const auto& f : trial.files) {
            if (f.kind != FileKind::Detections) continue;
            const auto det = read_detections_csv(config_.dataset_root / trial.rel_path / f.name, f.camera, config_.schema());
            int m = -1;
            for (const auto& r : det.rows) m = std::max(m, r.frame);
            last = last ? std::min(*last, m) : m;
          }
          if (!last || *last < 0) fail(ErrorCode::InvalidArgument, "open-ended manual trim needs detection files");
          end = *last;
        }
        TrimPlan plan;
        plan.num_trials = 1;
        for (const auto& cam : trial.cameras) {
          plan.windows.push_back(manual_window(manual.start, end, cam));
          plan.fps[cam] = config_.fps;
        }
        write_trim_outputs(trial, plan, "manual");
      });
}

void Pipeline::calibrate() {
  const DatasetIndex index = load_index(Step::Calibrate);
  if (index.calibration_scopes.empty())
    fail(ErrorCode::MissingPrerequisite, "calibrate needs calibration/corners.csv (no calibration folder in the dataset)");
  const Provenance prov{config_.saving_dir, config_.dataset_root};
  CalibrationOptions opts;
  opts.default_image_size = config_.image_size;
  // Scopes are independent; within one scope the solve runs alone.
  for_each_parallel(
      index.calibration_scopes.size(), [&](std::size_t i) { return join_rel(index.calibration_scopes[i], "calibration"); },
      [&](std::size_t i) {
        const std::string scope = index.calibration_scopes[i];
        const std::string corners_rel = join_rel(scope, "calibration/corners.csv");
        const fs::path corners = config_.dataset_root / corners_rel;
        if (!fs::exists(corners)) fail(ErrorCode::MissingPrerequisite, "calibrate needs " + corners_rel);
        const auto obs = read_corner_csv(corners);
        const CalibrationResult result = calibrate_rig(config_.board, obs, opts);
        const std::string out = join_rel(scope, "calibration/calibration.toml");
        write_calibration(result, config_.saving_dir / out);
        prov.write(join_rel(scope, "calibration/calibration.meta.json"), "calibrate", {"dataset:" + corners_rel}, {out},
                   {{"rms_error_px", result.rms_error_px}, {"iterations", result.iterations}});
      });
}

void Pipeline::triangulate() {
  const DatasetIndex index = load_index(Step::Triangulate);
  const Provenance prov{config_.saving_dir, config_.dataset_root};
  TriangulationOptions topts{config_.min_confidence, config_.inlier_threshold_px};

  for_each_parallel(
      index.trials.size(), [&](std::size_t i) { return index.trials[i].rel_path; },
      [&](std::size_t i) {
        const TrialEntry& trial = index.trials[i];
        const std::string scope = calibration_scope(trial.rel_path, index);
        const std::string cal_key = join_rel(scope, "calibration/calibration.toml");
        require_current(prov, join_rel(scope, "calibration/calibration.meta.json"), Step::Triangulate, cal_key);
        const std::string raw_rel = join_rel("videos-raw", trial.rel_path);
        require_current(prov, join_rel(raw_rel, "trim_plan.meta.json"), Step::Triangulate,
                        join_rel(raw_rel, "trim_plan.json"));
        const CameraRig rig = read_calibration(config_.saving_dir / cal_key);
        const TrimPlan plan = parse_trim_plan(io::read_text(config_.saving_dir / raw_rel / "trim_plan.json"));
        const double fps = plan.fps.empty() ? config_.fps : plan.fps.begin()->second;

        for (const auto& unit : trial_units(trial)) {
          std::vector<std::string> inputs{cal_key, join_rel(raw_rel, "trim_plan.json")};
          std::vector<Detections2D> dets;
          for (const auto& f : trial.files) {
            if (f.kind != FileKind::Detections) continue;
            const std::string key = join_rel(join_rel("videos-raw", unit), f.name);
            if (!rig.contains(f.camera))
              fail(ErrorCode::SchemaMismatch, "camera " + f.camera + " is not in " + cal_key);
            dets.push_back(read_detections_csv(config_.saving_dir / key, f.camera, config_.schema()));
            inputs.push_back(key);
          }
          if (dets.size() < 2)
            fail(ErrorCode::MissingPrerequisite, "triangulate needs 2D detection CSVs from at least two cameras");
          const auto records = triangulate_trial(rig, dets, topts);
          const std::string out = join_rel(join_rel("pose-3d", unit), "points3d.csv");
          io::write_text(config_.saving_dir / out, format_points_csv(records));
          prov.write(join_rel(join_rel("pose-3d", unit), "points3d.meta.json"), "triangulate", inputs, {out},
                     {{"fps", fps},
                      {"schema", config_.schema()},
                      {"min_confidence", config_.min_confidence},
                      {"inlier_threshold_px", config_.inlier_threshold_px},
                      {"unit_scale_mm", rig.unit_scale},
                      {"mm_conversion", "mean over used cameras of err_px * depth / mean focal length"},
                      {"mm_conversion_alternative", "depth of the nearest used camera"}},
                     {join_rel(scope, "calibration/calibration.meta.json"), join_rel(raw_rel, "trim_plan.meta.json")});
        }
      });
}

namespace {

struct UnitPoints {
  std::vector<Point3DRecord> records;
  double fps = 0.0;
  std::string input_key;
  std::string meta_key;
};

UnitPoints load_unit_points(const Provenance& prov, const std::string& unit, Step step) {
  const std::string dir = join_rel("pose-3d", unit);
  const std::string key = join_rel(dir, "points3d.csv");
  require_current(prov, join_rel(dir, "points3d.meta.json"), step, key);
  const auto meta = ordered_json::parse(io::read_text(prov.resolve(join_rel(dir, "points3d.meta.json"))));
  UnitPoints u;
  u.records = read_points_csv(prov.resolve(key));
  u.fps = meta["parameters"]["fps"].get<double>();
  u.input_key = key;
  u.meta_key = join_rel(dir, "points3d.meta.json");
  return u;
}

}  // namespace

void Pipeline::metrics() {
  const DatasetIndex index = load_index(Step::Metrics);
  const Provenance prov{config_.saving_dir, config_.dataset_root};

  for_each_parallel(
      index.trials.size(), [&](std::size_t i) { return index.trials[i].rel_path; },
      [&](std::size_t i) {
        const TrialEntry& trial = index.trials[i];
        const TrialLabels labels = labels_for(trial.rel_path);
        for (const auto& unit : trial_units(trial)) {
          const UnitPoints pts = load_unit_points(prov, unit, Step::Metrics);
          // Both measures run on the dt grid; LDJ additionally needs a
          // gap-free span, so it sees each marker's longest present run.
          std::vector<Trajectory3D> resampled, runs;
          for (const auto& tr : trajectories_from_records(pts.records, pts.fps)) {
            if (tr.present_count() < 2) continue;
            resampled.push_back(resample_uniform(interpolate_gaps(tr, config_.max_gap_frames), config_.dt_metrics));
            runs.push_back(longest_present_run(resampled.back()));
          }
          std::optional<MarkerAggregate> corr, jerk;
          try_metric([&] { corr = interframe_correlation(resampled, config_.correlation_mode); return corr->value; });
          try_metric([&] { jerk = ldj_median(runs); return jerk->value; });
          const double threshold = config_.large_error_threshold();
          const ErrorSummary err = error_summary(pts.records, threshold);

          ordered_json m;
          m["subject"] = labels.subject;
          m["condition"] = labels.condition;
          m["trial"] = unit;
          m["corr"] = corr ? ordered_json(corr->value) : ordered_json(nullptr);
          m["ldj"] = jerk ? ordered_json(jerk->value) : ordered_json(nullptr);
          m["err_mm"] = err.median_mm;
          m["pct_large"] = err.pct_large;
          m["n_frames"] = err.n_frames;
          m["n_markers"] = err.n_markers;
          m["markers_excluded"] = {{"corr", corr ? corr->excluded : static_cast<int>(resampled.size())},
                                   {"ldj", jerk ? jerk->excluded : static_cast<int>(runs.size())}};
          m["parameters"] = {{"dt", config_.dt_metrics},
                             {"fps", pts.fps},
                             {"max_gap_frames", config_.max_gap_frames},
                             {"correlation_mode", correlation_mode_name(config_.correlation_mode)},
                             {"large_error_threshold_mm", threshold}};

          const std::string dir = join_rel("metrics", unit);
          io::write_text(config_.saving_dir / dir / "metrics.json", m.dump(2) + "\n");
          std::string csv = "subject,condition,trial,corr,ldj,err_mm,pct_large,n_frames,n_markers\n";
          csv += labels.subject + "," + labels.condition + "," + unit + "," +
                 io::format_optional(corr ? std::optional<double>(corr->value) : std::nullopt) + "," +
                 io::format_optional(jerk ? std::optional<double>(jerk->value) : std::nullopt) + "," +
                 io::format_double(err.median_mm) + "," + io::format_double(err.pct_large) + "," +
                 std::to_string(err.n_frames) + "," + std::to_string(err.n_markers) + "\n";
          io::write_text(config_.saving_dir / dir / "metrics.csv", csv);
          prov.write(join_rel(dir, "metrics.meta.json"), "metrics", {pts.input_key},
                     {join_rel(dir, "metrics.json"), join_rel(dir, "metrics.csv")}, ordered_json::object(),
                     {pts.meta_key});
        }
      });
}

void Pipeline::features() {
  const DatasetIndex index = load_index(Step::Features);
  const Provenance prov{config_.saving_dir, config_.dataset_root};
  const LandmarkSchema& schema = landmark_schema(config_.schema());

  for_each_parallel(
      index.trials.size(), [&](std::size_t i) { return index.trials[i].rel_path; },
      [&](std::size_t i) {
        for (const auto& unit : trial_units(index.trials[i])) {
          const UnitPoints pts = load_unit_points(prov, unit, Step::Features);
          const FeatureTable table = feature_table(trajectories_from_records(pts.records, pts.fps), schema);
          const std::string dir = join_rel("features", unit);
          io::write_text(config_.saving_dir / dir / "features.csv", format_feature_csv(table));
          prov.write(join_rel(dir, "features.meta.json"), "features", {pts.input_key}, {join_rel(dir, "features.csv")},
                     {{"schema", schema.id}}, {pts.meta_key});
        }
      });
}

void Pipeline::report() {
  const DatasetIndex index = load_index(Step::Report);
  const Provenance prov{config_.saving_dir, config_.dataset_root};
  static const char* kMetrics[] = {"corr", "ldj", "err_mm", "pct_large"};

  std::vector<ordered_json> trials;
  std::vector<std::string> inputs, upstream;
  for (const auto& trial : index.trials) {
    const fs::path plan = config_.saving_dir / "videos-raw" / trial.rel_path / "trim_plan.json";
    if (!fs::exists(plan)) continue;
    for (const auto& unit : trial_units(trial)) {
      const std::string dir = join_rel("metrics", unit);
      if (!fs::exists(config_.saving_dir / dir / "metrics.json")) continue;
      require_current(prov, join_rel(dir, "metrics.meta.json"), Step::Report, join_rel(dir, "metrics.json"));
      trials.push_back(ordered_json::parse(io::read_text(config_.saving_dir / dir / "metrics.json")));
      inputs.push_back(join_rel(dir, "metrics.json"));
      upstream.push_back(join_rel(dir, "metrics.meta.json"));
    }
  }
  if (trials.empty()) fail(ErrorCode::NothingToReport, "no metrics.json under " + (config_.saving_dir / "metrics").string());

  std::string trials_csv = "subject,condition,trial,corr,ldj,err_mm,pct_large,n_frames,n_markers\n";
  for (const auto& t : trials) {
    trials_csv += t["subject"].get<std::string>() + "," + t["condition"].get<std::string>() + "," +
                  t["trial"].get<std::string>();
    for (const char* k : kMetrics) trials_csv += "," + io::format_optional(json_opt(t, k));
    trials_csv += "," + std::to_string(t["n_frames"].get<int>()) + "," + std::to_string(t["n_markers"].get<int>()) + "\n";
  }

  // Per-subject medians within each condition.
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::vector<double>>> groups;
  std::map<std::pair<std::string, std::string>, int> trial_counts;
  std::vector<std::string> conditions;
  for (const auto& t : trials) {
    const auto key = std::make_pair(t["subject"].get<std::string>(), t["condition"].get<std::string>());
    if (std::find(conditions.begin(), conditions.end(), key.second) == conditions.end()) conditions.push_back(key.second);
    ++trial_counts[key];
    for (const char* k : kMetrics)
      if (auto v = json_opt(t, k)) groups[key][k].push_back(*v);
  }
  std::sort(conditions.begin(), conditions.end());

  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> subject_medians;
  ordered_json subjects = ordered_json::array();
  std::string subjects_csv = "subject,condition,corr,ldj,err_mm,pct_large,n_trials\n";
  std::string plot_csv = "metric,condition,subject,value\n";
  for (const auto& [key, per_metric] : groups) {
    ordered_json row{{"subject", key.first}, {"condition", key.second}};
    subjects_csv += key.first + "," + key.second;
    for (const char* k : kMetrics) {
      std::optional<double> v;
      const auto it = per_metric.find(k);
      if (it != per_metric.end() && !it->second.empty()) v = median(it->second);
      if (v) subject_medians[key][k] = *v;
      row[k] = opt_json(v);
      subjects_csv += "," + io::format_optional(v);
    }
    row["n_trials"] = trial_counts[key];
    subjects_csv += "," + std::to_string(trial_counts[key]) + "\n";
    subjects.push_back(row);
  }
  for (const char* k : kMetrics)
    for (const auto& [key, vals] : subject_medians)
      if (auto it = vals.find(k); it != vals.end())
        plot_csv += std::string(k) + "," + key.second + "," + key.first + "," + io::format_double(it->second) + "\n";

  ordered_json cond_summary = ordered_json::array();
  std::string cond_csv = "condition,metric,mean,sd,n_subjects\n";
  for (const auto& c : conditions)
    for (const char* k : kMetrics) {
      std::vector<double> vals;
      for (const auto& [key, m] : subject_medians)
        if (key.second == c)
          if (auto it = m.find(k); it != m.end()) vals.push_back(it->second);
      if (vals.empty()) continue;
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      const double sd = stddev(vals);
      const std::optional<double> sd_opt = std::isnan(sd) ? std::nullopt : std::optional<double>(sd);
      cond_summary.push_back({{"condition", c}, {"metric", k}, {"mean", mean}, {"sd", opt_json(sd_opt)},
                              {"n_subjects", vals.size()}});
      cond_csv += c + "," + k + "," + io::format_double(mean) + "," + io::format_optional(sd_opt) + "," +
                  std::to_string(vals.size()) + "\n";
    }

  ordered_json report;
  report["n_trials"] = trials.size();
  report["conditions"] = conditions;
  report["trials"] = trials;
  report["subjects"] = subjects;
  report["condition_summary"] = cond_summary;
  if (conditions.size() == 2) {
    ordered_json icc = ordered_json::object();
    for (const char* k : kMetrics) {
      std::vector<std::array<double, 2>> rows;
      std::set<std::string> subject_ids;
      for (const auto& [key, m] : subject_medians) subject_ids.insert(key.first);
      for (const auto& s : subject_ids) {
        const auto a = subject_medians.find({s, conditions[0]});
        const auto b = subject_medians.find({s, conditions[1]});
        if (a == subject_medians.end() || b == subject_medians.end()) continue;
        const auto va = a->second.find(k), vb = b->second.find(k);
        if (va == a->second.end() || vb == b->second.end()) continue;
        rows.push_back({va->second, vb->second});
      }
      ordered_json entry{{"n_subjects", rows.size()}};
      if (rows.size() < 2) {
        entry["value"] = nullptr;
        entry["reason"] = "fewer than 2 subjects measured in both conditions";
      } else {
        Eigen::MatrixXd r(static_cast<Eigen::Index>(rows.size()), 2);
        for (std::size_t i = 0; i < rows.size(); ++i) r.row(static_cast<Eigen::Index>(i)) << rows[i][0], rows[i][1];
        try {
          entry["value"] = icc_a1(r);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::DegenerateVariance) throw;
          entry["value"] = nullptr;
          entry["reason"] = bare_message(e);
        }
      }
      icc[k] = entry;
    }
    report["icc_a1"] = icc;
  }

  io::write_text(config_.saving_dir / "report/trials.csv", trials_csv);
  io::write_text(config_.saving_dir / "report/subjects.csv", subjects_csv);
  io::write_text(config_.saving_dir / "report/conditions.csv", cond_csv);
  io::write_text(config_.saving_dir / "report/plot_data.csv", plot_csv);
  io::write_text(config_.saving_dir / "report/report.json", report.dump(2) + "\n");
  prov.write("report/report.meta.json", "report", inputs,
             {"report/trials.csv", "report/subjects.csv", "report/conditions.csv", "report/plot_data.csv",
              "report/report.json"},
             ordered_json::object(), upstream);
}

void Pipeline::run(Step step) {
  switch (step) {
    case Step::Scan: scan(); break;
    case Step::Trim: trim_auto(); break;
    case Step::Calibrate: calibrate(); break;
    case Step::Triangulate: triangulate(); break;
    case Step::Metrics: metrics(); break;
    case Step::Features: features(); break;
    case Step::Report: report(); break;
  }
}

}  // namespace mvt
