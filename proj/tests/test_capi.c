#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

#include "mvt/mvt.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static void test_rig(const char* work) {
  mvt_rig* rig = NULL;
  EXPECT(mvt_rig_synthetic(3, 0.6, &rig) == MVT_OK);
  EXPECT(mvt_rig_camera_count(rig) == 3);
  EXPECT(mvt_rig_unit_scale(rig) == 1000.0);

  const double x[3] = {0.02, -0.01, 0.61};
  size_t cams[3] = {0, 1, 2};
  double px[6], conf[3] = {1, 1, 1};
  for (size_t c = 0; c < 3; ++c) EXPECT(mvt_rig_project(rig, c, x, px + 2 * c) == MVT_OK);
  double out[3], err = -1;
  EXPECT(mvt_rig_triangulate(rig, 3, cams, px, conf, 0.5, 20.0, out, &err) == MVT_OK);
  EXPECT(fabs(out[0] - x[0]) + fabs(out[1] - x[1]) + fabs(out[2] - x[2]) < 1e-9);
  EXPECT(err >= 0 && err < 1e-6);
  EXPECT(mvt_rig_triangulate(rig, 1, cams, px, conf, 0.5, 20.0, out, NULL) == MVT_INSUFFICIENT_VIEWS);
  EXPECT(strstr(mvt_last_error(), "InsufficientViews") != NULL);

  const double behind[3] = {0, 0, -1};
  EXPECT(mvt_rig_project(rig, 0, behind, px) == MVT_NON_POSITIVE_DEPTH);
  EXPECT(mvt_rig_project(rig, 7, x, px) == MVT_INVALID_ARGUMENT);

  char path[1024];
  snprintf(path, sizeof path, "%s/rig.toml", work);
  EXPECT(mvt_rig_save(rig, path) == MVT_OK);
  mvt_rig* back = NULL;
  EXPECT(mvt_rig_load(path, &back) == MVT_OK);
  double px2[2];
  EXPECT(mvt_rig_project(back, 2, x, px2) == MVT_OK);
  EXPECT(fabs(px2[0] - px[4]) < 1e-9 && fabs(px2[1] - px[5]) < 1e-9);
  mvt_rig_free(back);
  mvt_rig_free(rig);

  snprintf(path, sizeof path, "%s/missing.toml", work);
  EXPECT(mvt_rig_load(path, &back) == MVT_IO_ERROR);
  EXPECT(mvt_rig_synthetic(1, 0.6, &rig) == MVT_INVALID_ARGUMENT);
  EXPECT(mvt_rig_synthetic(3, 0.6, NULL) == MVT_INVALID_ARGUMENT);
}

static void test_measures(void) {
  double v = 0;
  const double a[3] = {1, 0, 0}, b[3] = {0, 0, 0}, c[3] = {0, 1, 0};
  EXPECT(mvt_joint_angle(a, b, c, &v) == MVT_OK && fabs(v - 90.0) < 1e-9);
  EXPECT(mvt_joint_angle(a, a, c, &v) == MVT_DEGENERATE_VERTEX);

  double cube[24];
  for (int i = 0; i < 8; ++i) {
    cube[3 * i] = i & 1;
    cube[3 * i + 1] = (i >> 1) & 1;
    cube[3 * i + 2] = (i >> 2) & 1;
  }
  EXPECT(mvt_hull_volume(8, cube, &v) == MVT_OK && fabs(v - 1.0) < 1e-9);
  EXPECT(mvt_hull_volume(3, cube, &v) == MVT_TOO_FEW_POINTS);

  const double m[6] = {1, 2, 3, 4, 5, 6};
  EXPECT(mvt_icc_a1(3, 2, m, &v) == MVT_OK && fabs(v - 8.0 / 9.0) < 1e-12);
  const double flat[4] = {2, 2, 2, 2};
  EXPECT(mvt_icc_a1(2, 2, flat, &v) == MVT_DEGENERATE_VARIANCE);

  /* Minimum-jerk reach, T = 1 s at 200 Hz. */
  double xyz[3 * 201];
  for (int i = 0; i <= 200; ++i) {
    const double t = i / 200.0;
    xyz[3 * i] = 0.3 * (10 * pow(t, 3) - 15 * pow(t, 4) + 6 * pow(t, 5));
    xyz[3 * i + 1] = 0;
    xyz[3 * i + 2] = 0;
  }
  EXPECT(mvt_ldj(201, xyz, 0.005, &v) == MVT_OK && fabs(v - log(720.0)) < 0.01 * log(720.0));
  EXPECT(mvt_ldj(4, xyz, 0.005, &v) == MVT_TOO_SHORT);

  EXPECT(strcmp(mvt_status_name(MVT_MISSING_PREREQUISITE), "MissingPrerequisite") == 0);
  EXPECT(mvt_status_exit_code(MVT_OK) == 0);
  EXPECT(mvt_status_exit_code(MVT_SUFFIX_MISMATCH) == 2);
  EXPECT(mvt_status_exit_code(MVT_MISSING_PREREQUISITE) == 3);
  EXPECT(mvt_status_exit_code(MVT_NO_CONVERGENCE) == 4);
  EXPECT(mvt_version()[0] != '\0');
}

static void test_pipeline(const char* work) {
  char dir[1024], cfg_path[1100];
  snprintf(dir, sizeof dir, "%s/fixture", work);
  EXPECT(mvt_synth_fixture(dir, 3, 2, 0.5, 11) == MVT_OK);
  snprintf(cfg_path, sizeof cfg_path, "%s/config.json", dir);

  mvt_config* cfg = NULL;
  EXPECT(mvt_config_load(cfg_path, &cfg) == MVT_OK);
  EXPECT(mvt_run_step(cfg, "triangulate") == MVT_MISSING_PREREQUISITE);
  EXPECT(mvt_run_step(cfg, "scan") == MVT_OK);
  EXPECT(mvt_trim_manual(cfg, 13, -1, "subj1/condA") == MVT_OK);
  EXPECT(mvt_run_step(cfg, "trim") == MVT_OK);
  EXPECT(mvt_run_step(cfg, "triangulate") == MVT_MISSING_PREREQUISITE);
  EXPECT(strstr(mvt_last_error(), "calibration/calibration.toml") != NULL);
  const char* steps[] = {"calibrate", "triangulate", "metrics", "features", "report"};
  for (int i = 0; i < 5; ++i) EXPECT(mvt_run_step(cfg, steps[i]) == MVT_OK);
  EXPECT(mvt_run_step(cfg, "dance") == MVT_INVALID_ARGUMENT);
  EXPECT(mvt_config_set(cfg, "metrics.dt", "0") == MVT_INVALID_ARGUMENT);
  EXPECT(mvt_config_set(cfg, "metrics.dt", "0.01") == MVT_OK);
  EXPECT(mvt_config_save(cfg, cfg_path) == MVT_OK);
  mvt_config_free(cfg);

  char report[1200];
  snprintf(report, sizeof report, "%s/output/report/report.json", dir);
  struct stat st;
  EXPECT(stat(report, &st) == 0 && st.st_size > 0);

  mvt_config* fresh = NULL;
  char data[1100], out[1100];
  snprintf(data, sizeof data, "%s/dataset", dir);
  snprintf(out, sizeof out, "%s/other", work);
  EXPECT(mvt_config_new(data, out, &fresh) == MVT_OK);
  EXPECT(mvt_run_step(fresh, "report") == MVT_MISSING_PREREQUISITE);
  EXPECT(mvt_config_set(fresh, "body_part", "tail") == MVT_INVALID_ARGUMENT);
  mvt_config_free(fresh);
}

int main(int argc, char** argv) {
  const char* work = argc > 1 ? argv[1] : "capi_work";
  char cmd[1100];
  snprintf(cmd, sizeof cmd, "rm -rf '%s' && mkdir -p '%s'", work, work);
  if (system(cmd) != 0) return 1;
  test_rig(work);
  test_measures();
  test_pipeline(work);
  if (failures) {
    fprintf(stderr, "%d C API check(s) failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
