/* C interface to the multi-view tracking library. Every function returns an
 * mvt_status; on failure mvt_last_error() describes the most recent error on
 * the calling thread. Handles are opaque and owned by the caller. */
#ifndef MVT_H
#define MVT_H

#include <stddef.h>

#if defined(MVT_BUILDING_LIBRARY)
#define MVT_API __attribute__((visibility("default")))
#else
#define MVT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mvt_status {
  MVT_OK = 0,
  MVT_INVALID_ARGUMENT = 1,
  MVT_IO_ERROR = 2,
  MVT_PARSE_ERROR = 3,
  MVT_SCHEMA_ERROR = 4,
  MVT_NON_POSITIVE_DEPTH = 10,
  MVT_NO_CONVERGENCE = 11,
  MVT_DEGENERATE_CONFIGURATION = 12,
  MVT_RANK_DEFICIENT = 13,
  MVT_INSUFFICIENT_VIEWS = 14,
  MVT_DISCONNECTED_RIG = 15,
  MVT_DEGENERATE_GEOMETRY = 16,
  MVT_ROI_OUT_OF_BOUNDS = 20,
  MVT_STREAM_TRUNCATED = 21,
  MVT_EVENT_COUNT_MISMATCH = 22,
  MVT_SKEW_TOO_LARGE = 23,
  MVT_INVERTED_RANGE = 24,
  MVT_OVERLAPPING_TRIALS = 25,
  MVT_SCHEMA_MISMATCH = 30,
  MVT_EMPTY_INPUT = 31,
  MVT_TOO_SHORT = 32,
  MVT_NON_UNIFORM = 33,
  MVT_CONTAINS_GAPS = 34,
  MVT_ZERO_VARIANCE = 40,
  MVT_DEGENERATE_ZERO_JERK = 41,
  MVT_ZERO_PATH = 42,
  MVT_DEGENERATE_VARIANCE = 43,
  MVT_DEGENERATE_VERTEX = 44,
  MVT_TOO_FEW_POINTS = 45,
  MVT_NON_VIDEO_IN_LEAF = 50,
  MVT_SUFFIX_MISMATCH = 51,
  MVT_CAMERA_SET_INCONSISTENT = 52,
  MVT_MISSING_PREREQUISITE = 53,
  MVT_NOTHING_TO_REPORT = 54,
  MVT_INTERNAL_ERROR = 99
} mvt_status;

typedef struct mvt_rig mvt_rig;
typedef struct mvt_config mvt_config;

MVT_API const char* mvt_version(void);
MVT_API const char* mvt_last_error(void);
MVT_API const char* mvt_status_name(mvt_status status);
/* 0 ok, 2 validation, 3 missing prerequisite, 4 numeric failure. */
MVT_API int mvt_status_exit_code(mvt_status status);

/* Camera rigs. */
MVT_API mvt_status mvt_rig_load(const char* calibration_path, mvt_rig** out);
MVT_API mvt_status mvt_rig_synthetic(int n_cams, double radius, mvt_rig** out);
MVT_API mvt_status mvt_rig_save(const mvt_rig* rig, const char* path);
MVT_API void mvt_rig_free(mvt_rig* rig);
MVT_API size_t mvt_rig_camera_count(const mvt_rig* rig);
MVT_API double mvt_rig_unit_scale(const mvt_rig* rig);
MVT_API mvt_status mvt_rig_project(const mvt_rig* rig, size_t camera, const double xyz[3], double out_px[2]);
/* n_views pixels (x, y pairs) with camera indices and confidences; out_px_error
 * may be NULL. */
MVT_API mvt_status mvt_rig_triangulate(const mvt_rig* rig, size_t n_views, const size_t* cameras, const double* pixels,
                                       const double* confidences, double min_confidence, double inlier_threshold_px,
                                       double out_xyz[3], double* out_px_error);

/* Stateless measures. */
MVT_API mvt_status mvt_ldj(size_t n, const double* xyz, double dt, double* out);
MVT_API mvt_status mvt_icc_a1(size_t n_subjects, size_t n_conditions, const double* row_major, double* out);
MVT_API mvt_status mvt_joint_angle(const double a[3], const double b[3], const double c[3], double* out_deg);
MVT_API mvt_status mvt_hull_volume(size_t n, const double* xyz, double* out);

/* Pipeline configuration and steps. */
MVT_API mvt_status mvt_config_new(const char* dataset_root, const char* saving_dir, mvt_config** out);
MVT_API mvt_status mvt_config_load(const char* path, mvt_config** out);
MVT_API mvt_status mvt_config_save(const mvt_config* config, const char* path);
/* key uses the file's nesting joined with '.', e.g. "trim.num_trials". */
MVT_API mvt_status mvt_config_set(mvt_config* config, const char* key, const char* value);
MVT_API void mvt_config_free(mvt_config* config);

/* step: scan, trim, calibrate, triangulate, metrics, features or report. */
MVT_API mvt_status mvt_run_step(const mvt_config* config, const char* step);
/* end < 0 means the last frame; trial_filter may be NULL. */
MVT_API mvt_status mvt_trim_manual(const mvt_config* config, int start, int end, const char* trial_filter);

/* Writes a synthetic dataset with ground truth into dir. */
MVT_API mvt_status mvt_synth_fixture(const char* dir, int n_cams, int n_subjects, double noise_px,
                                     unsigned long long seed);

#ifdef __cplusplus
}
#endif

#endif
