#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "mvt_cli_test";

struct Result {
  int code = -1;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result mvt(const std::string& args) {
  const fs::path err = kWork / "stderr.txt";
  const std::string cmd = "cd '" + kWork.string() + "' && '" + MVT_CLI_PATH + "' " + args + " >/dev/null 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

}  // namespace

TEST_CASE("command-line workflow and exit codes") {
  fs::remove_all(kWork);
  fs::create_directories(kWork);

  CHECK(mvt("").code == 2);
  CHECK(mvt("--version").code == 0);
  CHECK(mvt("frobnicate").code == 2);
  CHECK(mvt("synth fx --cams 3 --subjects 2 --noise 0.5 --seed 3").code == 0);
  CHECK(fs::exists(kWork / "fx/config.json"));

  const std::string cfg = "-c fx/cfg.json";
  CHECK(mvt("configure " + cfg + " --dataset-root fx/dataset").code == 2);
  CHECK(mvt("configure " + cfg + " --dataset-root fx/dataset --saving-dir fx/out --body-part elbow").code == 2);
  CHECK(mvt("configure " + cfg + " --dataset-root fx/dataset --saving-dir fx/out --set trim.num_trials=1").code == 0);
  CHECK(fs::exists(kWork / "fx/cfg.json"));

  auto r = mvt("triangulate " + cfg);
  CHECK(r.code == 3);
  CHECK(r.err.find("mvt: MissingPrerequisite") == 0);
  CHECK(mvt("scan " + cfg).code == 0);
  CHECK(mvt("trim --auto --manual 1:4 " + cfg).code == 2);
  CHECK(mvt("trim --manual 9:4 " + cfg).code == 2);
  CHECK(mvt("trim --manual x:4 " + cfg).code == 2);
  CHECK(mvt("trim --manual 12:end --trial subj1/condA " + cfg).code == 0);
  CHECK(mvt("trim --auto --num-trials 2 " + cfg).code == 2);
  CHECK(mvt("trim --auto --light-threshold 200 --pixel-threshold 5 " + cfg).code == 0);
  r = mvt("triangulate " + cfg);
  CHECK(r.code == 3);
  CHECK(r.err.find("calibration/calibration.toml") != std::string::npos);
  CHECK(mvt("calibrate --board 9,6,25 " + cfg).code == 2);
  CHECK(mvt("calibrate --board 9,6,25,18.75 " + cfg).code == 2);
  CHECK(mvt("calibrate --board 10,7,25,18.75 " + cfg).code == 0);
  CHECK(mvt("triangulate --set triangulation.min_confidence=2 " + cfg).code == 2);
  CHECK(mvt("triangulate --set nothing=1 " + cfg).code == 2);
  for (const char* step : {"triangulate", "metrics", "features", "report"}) CHECK(mvt(std::string(step) + " " + cfg).code == 0);
  CHECK(fs::exists(kWork / "fx/out/report/plot_data.csv"));
  CHECK(mvt("report -c fx/none.json").code == 2);

  // Camera C's boards never overlap the others: the rig cannot be chained.
  std::ifstream in(kWork / "fx/dataset/calibration/corners.csv");
  std::ostringstream out;
  std::string line;
  std::getline(in, line);
  out << line << "\n";
  while (std::getline(in, line)) {
    if (line.rfind("C,", 0) == 0) {
      const auto a = line.find(',', 2);
      line = "C," + std::to_string(1000 + std::stoi(line.substr(2, a - 2))) + line.substr(a);
    }
    out << line << "\n";
  }
  in.close();
  std::ofstream(kWork / "fx/dataset/calibration/corners.csv") << out.str();
  r = mvt("calibrate " + cfg);
  CHECK(r.code == 4);
  CHECK(r.err.find("DisconnectedRig") != std::string::npos);
  fs::remove_all(kWork);
}
