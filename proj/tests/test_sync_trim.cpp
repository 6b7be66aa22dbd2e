#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mvt/error.hpp"
#include "mvt/synthetic.hpp"
#include "mvt/sync_trim.hpp"

using namespace mvt;

namespace {

ErrorCode code_of(const std::function<void()>& fn, std::string* message = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  return ErrorCode::Ok;
}

IntensityTrace trace_of(std::vector<int> counts, const std::string& cam = "A", double fps = 60.0) {
  return IntensityTrace{cam, fps, std::move(counts)};
}

using Events = std::vector<std::pair<int, int>>;

struct Rgb {
  unsigned char r, g, b;
};

std::string stream_of(int w, int h, double fps, const std::vector<std::vector<Rgb>>& frames) {
  std::ostringstream out;
  out << w << " " << h << " " << fps << " rgb24\n";
  for (const auto& f : frames)
    for (const auto& px : f) out << px.r << px.g << px.b;
  return out.str();
}

}  // namespace

TEST_CASE("red counts follow the threshold and margin rule") {
  const int w = 8, h = 6;
  std::vector<std::vector<Rgb>> frames(3, std::vector<Rgb>(w * h, Rgb{0, 0, 0}));
  for (int i = 0; i < 7; ++i) frames[1][(2 + i / 4) * w + 2 + i % 4] = Rgb{255, 0, 0};
  for (auto& px : frames[2]) px = Rgb{255, 255, 255};
  std::istringstream in(stream_of(w, h, 30.0, frames));
  const IntensityTrace t = roi_red_counts(in, RoiSpec{"A", 1, 1, 6, 4}, RedCountOptions{200, 30});
  CHECK(t.fps == 30.0);
  CHECK(t.counts == std::vector<int>{0, 7, 0});
}

TEST_CASE("red counts respect the ROI and dim reds") {
  const int w = 4, h = 4;
  std::vector<std::vector<Rgb>> frames(1, std::vector<Rgb>(w * h, Rgb{255, 0, 0}));
  frames[0][0] = Rgb{199, 0, 0};
  frames[0][1] = Rgb{250, 230, 0};
  std::istringstream in(stream_of(w, h, 25.0, frames));
  const IntensityTrace t = roi_red_counts(in, RoiSpec{"A", 0, 0, 2, 2}, RedCountOptions{200, 30});
  CHECK(t.counts == std::vector<int>{2});
}

TEST_CASE("frame stream errors") {
  std::vector<std::vector<Rgb>> frames(2, std::vector<Rgb>(16, Rgb{0, 0, 0}));
  {
    std::istringstream in(stream_of(4, 4, 30, frames));
    CHECK(code_of([&] { roi_red_counts(in, RoiSpec{"A", 2, 2, 3, 1}); }) == ErrorCode::RoiOutOfBounds);
  }
  {
    std::string s = stream_of(4, 4, 30, frames);
    s.resize(s.size() - 5);
    std::istringstream in(s);
    CHECK(code_of([&] { roi_red_counts(in, RoiSpec{"A", 0, 0, 2, 2}); }) == ErrorCode::StreamTruncated);
  }
  {
    std::istringstream in("4 4 thirty rgb24\n");
    CHECK(code_of([&] { roi_red_counts(in, RoiSpec{"A", 0, 0, 2, 2}); }) == ErrorCode::ParseError);
  }
}

TEST_CASE("detect_events examples") {
  CHECK(detect_events(trace_of({0, 0, 7, 8, 9, 0, 0}), 5, 1) == Events{{2, 4}});
  CHECK(detect_events(trace_of({0, 7, 0, 7, 7, 0}), 5, 2) == Events{{3, 4}});
  CHECK(detect_events(trace_of({0, 9, 9, 0, 0, 9, 9, 0}), 5, 1) == Events{{1, 2}, {5, 6}});
  CHECK(detect_events(trace_of({}), 5, 1).empty());
  CHECK(detect_events(trace_of({9, 9, 9}), 5, 2) == Events{{0, 2}});
}

TEST_CASE("detect_events is monotone in the pixel threshold") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> count(0, 20), len(20, 120), deb(1, 3);
  for (int c = 0; c < 50; ++c) {
    std::vector<int> counts(len(rng));
    for (auto& v : counts) v = count(rng);
    const auto trace = trace_of(counts);
    const int d = deb(rng);
    std::set<int> prev_on;
    for (int thr = 1; thr <= 21; ++thr) {
      std::set<int> on;
      for (const auto& [a, b] : detect_events(trace, thr, d))
        for (int f = a; f <= b; ++f) on.insert(f);
      if (thr > 1)
        for (int f : on) CHECK(prev_on.count(f) == 1);
      prev_on = on;
    }
  }
}

TEST_CASE("plan_trims examples") {
  std::vector<IntensityTrace> traces;
  for (const char* cam : {"A", "B", "C"}) {
    std::vector<int> counts(80, 0);
    for (int f = 2; f <= 61; ++f) counts[f] = 40;
    traces.push_back(trace_of(counts, cam, 60.0));
  }
  const TrimPlan plan = plan_trims(traces);
  CHECK(plan.num_trials == 1);
  REQUIRE(plan.windows.size() == 3);
  for (const auto& w : plan.windows) {
    CHECK(w.start_frame == 2);
    CHECK(w.end_frame == 61);
    CHECK(w.trial_index == 0);
  }
  CHECK(plan.fps.at("B") == 60.0);

  TrimOptions fixed;
  fixed.fixed_length_s = 0.5;
  for (const auto& w : plan_trims(traces, fixed).windows) {
    CHECK(w.start_frame == 2);
    CHECK(w.end_frame == 31);
  }
}

TEST_CASE("event count mismatch names the camera") {
  const auto a = synth_led_trace(60, 5, 20, 2, 10, 2, 1, "A");
  const auto b = synth_led_trace(60, 5, 20, 1, 10, 2, 2, "B");
  TrimOptions opts;
  opts.num_trials = 2;
  std::string msg;
  CHECK(code_of([&] { plan_trims({a.trace, b.trace}, opts); }, &msg) == ErrorCode::EventCountMismatch);
  CHECK(msg.find("camera B: found 1") != std::string::npos);
  CHECK(msg.find("expected 2") != std::string::npos);
}

TEST_CASE("cross-camera skew is bounded") {
  const auto a = synth_led_trace(60, 5, 40, 1, 1, 2, 1, "A");
  const auto b = synth_led_trace(60, 5, 45, 1, 1, 2, 2, "B");
  CHECK(code_of([&] { plan_trims({a.trace, b.trace}); }) == ErrorCode::SkewTooLarge);
  const auto c = synth_led_trace(60, 9, 42, 1, 1, 2, 3, "C");
  CHECK(code_of([&] { plan_trims({a.trace, c.trace}); }) == ErrorCode::Ok);
}

TEST_CASE("synthetic LED traces are recovered exactly") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> on(0, 30), span(8, 90), gap(1, 40), trials(1, 4);
  for (int c = 0; c < 30; ++c) {
    const int n = trials(rng);
    const int first = on(rng);
    std::vector<IntensityTrace> traces;
    std::vector<LedTruth> truths;
    const int s = span(rng), g = gap(rng);
    for (int cam = 0; cam < 3; ++cam) {
      const int shift = cam * 3;
      truths.push_back(synth_led_trace(60, first + shift, first + shift + s - 1, n, g + 2, 4, c * 10 + cam,
                                       std::string(1, static_cast<char>('A' + cam))));
      traces.push_back(truths.back().trace);
    }
    TrimOptions opts;
    opts.num_trials = n;
    const TrimPlan plan = plan_trims(traces, opts);
    CHECK(plan.num_trials == n);
    for (int k = 0; k < n; ++k) {
      const auto windows = plan.trial(k);
      REQUIRE(windows.size() == 3);
      for (int cam = 0; cam < 3; ++cam) {
        CHECK(windows[cam].start_frame == truths[cam].events[k].first);
        CHECK(windows[cam].end_frame == truths[cam].events[k].second);
      }
    }
  }
}

TEST_CASE("shifting one camera shifts only its windows") {
  const auto a = synth_led_trace(60, 10, 50, 1, 1, 2, 1, "A");
  auto b = synth_led_trace(60, 10, 50, 1, 1, 2, 2, "B");
  const TrimPlan base = plan_trims({a.trace, b.trace});
  const int delta = 7;
  b.trace.counts.insert(b.trace.counts.begin(), delta, 0);
  const TrimPlan shifted = plan_trims({a.trace, b.trace});
  CHECK(shifted.trial(0)[0].start_frame == base.trial(0)[0].start_frame);
  CHECK(shifted.trial(0)[1].start_frame == base.trial(0)[1].start_frame + delta);
  CHECK(shifted.trial(0)[1].end_frame == base.trial(0)[1].end_frame + delta);
}

TEST_CASE("synthetic LED generator") {
  const auto t = synth_led_trace(60, 2, 61, 1, 1, 3, 9);
  REQUIRE(t.events.size() == 1);
  CHECK(t.events[0] == std::pair<int, int>{2, 61});
  for (int f = 0; f < static_cast<int>(t.trace.counts.size()); ++f) {
    if (f >= 2 && f <= 61)
      CHECK(t.trace.counts[f] >= 40);
    else
      CHECK(t.trace.counts[f] <= 3);
  }
  CHECK(detect_events(t.trace, 5, 2) == Events{{2, 61}});
  const auto two = synth_led_trace(60, 3, 12, 2, 5, 3, 9);
  CHECK(detect_events(two.trace, 5, 2) == two.events);
  CHECK(code_of([] { synth_led_trace(60, 3, 12, 2, 0, 3, 9); }) == ErrorCode::OverlappingTrials);
}

TEST_CASE("manual windows") {
  const TrimWindow w = manual_window(10, 500, "A");
  CHECK(w.start_frame == 10);
  CHECK(w.end_frame == 500);
  CHECK(w.trial_index == 0);
  CHECK(manual_window(5, 5, "A").end_frame == 5);
  CHECK(code_of([] { manual_window(9, 3, "A"); }) == ErrorCode::InvertedRange);
}

TEST_CASE("trim plan JSON roundtrip") {
  const auto a = synth_led_trace(60, 4, 20, 2, 6, 2, 1, "A");
  const auto b = synth_led_trace(50, 5, 21, 2, 6, 2, 2, "B");
  TrimOptions opts;
  opts.num_trials = 2;
  const TrimPlan plan = plan_trims({a.trace, b.trace}, opts);
  const std::string json = format_trim_plan(plan, "auto");
  CHECK(json.find("last_on_inclusive") != std::string::npos);
  const TrimPlan back = parse_trim_plan(json);
  CHECK(back.num_trials == 2);
  CHECK(back.fps == plan.fps);
  REQUIRE(back.windows.size() == plan.windows.size());
  for (std::size_t i = 0; i < back.windows.size(); ++i) {
    CHECK(back.windows[i].camera == plan.windows[i].camera);
    CHECK(back.windows[i].start_frame == plan.windows[i].start_frame);
    CHECK(back.windows[i].end_frame == plan.windows[i].end_frame);
    CHECK(back.windows[i].trial_index == plan.windows[i].trial_index);
  }
  CHECK(format_trim_plan(back, "auto") == json);
  CHECK(code_of([] { parse_trim_plan("{not json"); }) == ErrorCode::ParseError);
}

TEST_CASE("trace CSV roundtrip") {
  const auto t = synth_led_trace(60, 4, 20, 1, 1, 2, 1, "A");
  const auto dir = std::filesystem::temp_directory_path() / "mvt_trace_csv";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "x.trace.csv") << format_trace_csv(t.trace);
  const IntensityTrace back = read_trace_csv(dir / "x.trace.csv", "A", 60.0);
  CHECK(back.counts == t.trace.counts);
  std::ofstream(dir / "bad.trace.csv") << "frame,count\n0,1\n2,1\n";
  CHECK(code_of([&] { read_trace_csv(dir / "bad.trace.csv", "A", 60.0); }) != ErrorCode::Ok);
  std::filesystem::remove_all(dir);
}
