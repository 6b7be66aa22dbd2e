// Command-line driver. Talks to the library only through the C interface.
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mvt/mvt.h"

namespace {

struct ConfigHandle {
  mvt_config* ptr = nullptr;
  ~ConfigHandle() { mvt_config_free(ptr); }
};

int report(mvt_status st) {
  if (st == MVT_OK) return 0;
  std::fprintf(stderr, "mvt: %s\n", mvt_last_error());
  return mvt_status_exit_code(st);
}

// Applies "key=value" overrides in order; stops at the first failure.
mvt_status apply_overrides(mvt_config* cfg, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "mvt: --set expects key=value, got '%s'\n", s.c_str());
      return MVT_INVALID_ARGUMENT;
    }
    if (mvt_status st = mvt_config_set(cfg, s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()); st != MVT_OK) return st;
  }
  return MVT_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view markerless tracking pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mvt_version()));

  std::string config_path = "config.json";
  std::vector<std::string> sets;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "Pipeline configuration file")->capture_default_str();
    sub->add_option("--set", sets, "Override a configuration value (key=value, nested keys joined by '.')");
  };

  std::string dataset_root, saving_dir, body_part;
  auto* configure = app.add_subcommand("configure", "Write a configuration file");
  configure->add_option("-c,--config", config_path, "Output configuration file")->capture_default_str();
  configure->add_option("--dataset-root", dataset_root, "Dataset folder")->required();
  configure->add_option("--saving-dir", saving_dir, "Output folder")->required();
  configure->add_option("--body-part", body_part, "right_hand, left_hand, full_body or face");
  configure->add_option("--set", sets, "Extra configuration value (key=value)");

  auto* scan = app.add_subcommand("scan", "Index the dataset and mirror its folders");
  add_common(scan);

  std::string manual;
  bool autodetect = false;
  std::vector<std::string> rois;
  std::optional<int> light, pixels, num_trials;
  std::optional<double> trial_length;
  std::string trial_filter;
  auto* trim = app.add_subcommand("trim", "Cut trials by LED events or a fixed frame range");
  add_common(trim);
  auto* manual_opt = trim->add_option("--manual", manual, "START:END frames, END may be 'end'");
  auto* auto_opt = trim->add_flag("--auto", autodetect, "Detect LED events");
  manual_opt->excludes(auto_opt);
  trim->add_option("--roi", rois, "LED region CAM:x,y,w,h");
  trim->add_option("--light-threshold", light, "Red channel threshold (0-255)");
  trim->add_option("--pixel-threshold", pixels, "Lit pixels needed inside the ROI");
  trim->add_option("--num-trials", num_trials, "Expected LED events per recording");
  trim->add_option("--trial-length", trial_length, "Fixed trial length in seconds");
  trim->add_option("--trial", trial_filter, "Restrict manual trimming to this trial folder");

  std::string board;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate every rig scope from board corners");
  add_common(calibrate);
  calibrate->add_option("--board", board, "squares_x,squares_y,square_mm,marker_mm");

  auto* triangulate = app.add_subcommand("triangulate", "Reconstruct 3D landmarks");
  add_common(triangulate);
  auto* metrics = app.add_subcommand("metrics", "Per-trial quality metrics");
  add_common(metrics);
  auto* features = app.add_subcommand("features", "Per-frame kinematic features");
  add_common(features);
  auto* rep = app.add_subcommand("report", "Summary tables and plot data");
  add_common(rep);

  std::string synth_dir;
  int synth_cams = 3, synth_subjects = 3;
  double synth_noise = 0.0;
  unsigned long long synth_seed = 1;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset with ground truth");
  synth->add_option("dir", synth_dir, "Output folder")->required();
  synth->add_option("--cams", synth_cams, "Number of cameras (2-5)")->capture_default_str();
  synth->add_option("--subjects", synth_subjects, "Number of subjects")->capture_default_str();
  synth->add_option("--noise", synth_noise, "Detection noise, pixels")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (synth->parsed())
    return report(mvt_synth_fixture(synth_dir.c_str(), synth_cams, synth_subjects, synth_noise, synth_seed));

  ConfigHandle cfg;
  if (configure->parsed()) {
    if (mvt_status st = mvt_config_new(dataset_root.c_str(), saving_dir.c_str(), &cfg.ptr); st != MVT_OK) return report(st);
    if (!body_part.empty()) sets.insert(sets.begin(), "body_part=" + body_part);
    if (mvt_status st = apply_overrides(cfg.ptr, sets); st != MVT_OK) return report(st);
    return report(mvt_config_save(cfg.ptr, config_path.c_str()));
  }

  if (mvt_status st = mvt_config_load(config_path.c_str(), &cfg.ptr); st != MVT_OK) return report(st);

  if (trim->parsed()) {
    if (light) sets.push_back("trim.light_threshold=" + std::to_string(*light));
    if (pixels) sets.push_back("trim.pixel_threshold=" + std::to_string(*pixels));
    if (num_trials) sets.push_back("trim.num_trials=" + std::to_string(*num_trials));
    if (trial_length) sets.push_back("trim.trial_length_s=" + std::to_string(*trial_length));
    for (const auto& r : rois) {
      const auto colon = r.find(':');
      if (colon == std::string::npos) {
        std::fprintf(stderr, "mvt: --roi expects CAM:x,y,w,h, got '%s'\n", r.c_str());
        return 2;
      }
      sets.push_back("trim.rois." + r.substr(0, colon) + "=[" + r.substr(colon + 1) + "]");
    }
  }
  if (calibrate->parsed() && !board.empty()) {
    std::vector<std::string> parts;
    std::stringstream ss(board);
    for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
    if (parts.size() != 4) {
      std::fprintf(stderr, "mvt: --board expects squares_x,squares_y,square_mm,marker_mm\n");
      return 2;
    }
    sets.push_back("board.squares_x=" + parts[0]);
    sets.push_back("board.squares_y=" + parts[1]);
    sets.push_back("board.square_length_mm=" + parts[2]);
    sets.push_back("board.marker_length_mm=" + parts[3]);
  }
  if (mvt_status st = apply_overrides(cfg.ptr, sets); st != MVT_OK) return report(st);

  if (scan->parsed()) return report(mvt_run_step(cfg.ptr, "scan"));
  if (trim->parsed()) {
    if (manual.empty()) {
      if (!trial_filter.empty()) {
        std::fprintf(stderr, "mvt: --trial only applies to --manual\n");
        return 2;
      }
      return report(mvt_run_step(cfg.ptr, "trim"));
    }
    const auto colon = manual.find(':');
    int start = 0, end = -1;
    try {
      if (colon == std::string::npos) throw std::invalid_argument("no colon");
      start = std::stoi(manual.substr(0, colon));
      const std::string e = manual.substr(colon + 1);
      end = e == "end" ? -1 : std::stoi(e);
      if (e != "end" && end < 0) throw std::invalid_argument("negative end");
    } catch (const std::exception&) {
      std::fprintf(stderr, "mvt: --manual expects START:END, got '%s'\n", manual.c_str());
      return 2;
    }
    return report(mvt_trim_manual(cfg.ptr, start, end, trial_filter.empty() ? nullptr : trial_filter.c_str()));
  }
  if (calibrate->parsed()) return report(mvt_run_step(cfg.ptr, "calibrate"));
  if (triangulate->parsed()) return report(mvt_run_step(cfg.ptr, "triangulate"));
  if (metrics->parsed()) return report(mvt_run_step(cfg.ptr, "metrics"));
  if (features->parsed()) return report(mvt_run_step(cfg.ptr, "features"));
  if (rep->parsed()) return report(mvt_run_step(cfg.ptr, "report"));
  return 2;
}
