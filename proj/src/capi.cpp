#include "mvt/mvt.h"

#include <exception>
#include <string>

#include "mvt/calibration_file.hpp"
#include "mvt/error.hpp"
#include "mvt/features.hpp"
#include "mvt/metrics.hpp"
#include "mvt/pipeline.hpp"
#include "mvt/synthetic.hpp"
#include "mvt/triangulation.hpp"

struct mvt_rig {
  mvt::CameraRig rig;
};

struct mvt_config {
  mvt::PipelineConfig config;
};

namespace {

thread_local std::string last_error;

template <class F>
mvt_status guarded(F&& fn) {
  try {
    fn();
    last_error.clear();
    return MVT_OK;
  } catch (const mvt::Error& e) {
    last_error = e.what();
    return static_cast<mvt_status>(e.code());
  } catch (const std::exception& e) {
    last_error = std::string("InternalError: ") + e.what();
    return MVT_INTERNAL_ERROR;
  } catch (...) {
    last_error = "InternalError: unknown exception";
    return MVT_INTERNAL_ERROR;
  }
}

void require(bool ok, const char* what) {
  if (!ok) mvt::fail(mvt::ErrorCode::InvalidArgument, what);
}

mvt::Vec3 vec3(const double* v) { return {v[0], v[1], v[2]}; }

}  // namespace

extern "C" {

const char* mvt_version(void) { return "1.0.0"; }

const char* mvt_last_error(void) { return last_error.c_str(); }

const char* mvt_status_name(mvt_status status) {
  if (status == MVT_INTERNAL_ERROR) return "InternalError";
  return mvt::error_code_name(static_cast<mvt::ErrorCode>(status));
}

int mvt_status_exit_code(mvt_status status) {
  if (status == MVT_INTERNAL_ERROR) return 4;
  return mvt::exit_code_for(static_cast<mvt::ErrorCode>(status));
}

mvt_status mvt_rig_load(const char* calibration_path, mvt_rig** out) {
  return guarded([&] {
    require(calibration_path && out, "null argument");
    *out = new mvt_rig{mvt::read_calibration(calibration_path)};
  });
}

mvt_status mvt_rig_synthetic(int n_cams, double radius, mvt_rig** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = new mvt_rig{mvt::make_rig(n_cams, radius)};
  });
}

mvt_status mvt_rig_save(const mvt_rig* rig, const char* path) {
  return guarded([&] {
    require(rig && path, "null argument");
    mvt::CalibrationResult r;
    r.rig = rig->rig;
    mvt::write_calibration(r, path);
  });
}

void mvt_rig_free(mvt_rig* rig) { delete rig; }

size_t mvt_rig_camera_count(const mvt_rig* rig) { return rig ? rig->rig.size() : 0; }

double mvt_rig_unit_scale(const mvt_rig* rig) { return rig ? rig->rig.unit_scale : 0.0; }

mvt_status mvt_rig_project(const mvt_rig* rig, size_t camera, const double xyz[3], double out_px[2]) {
  return guarded([&] {
    require(rig && xyz && out_px, "null argument");
    require(camera < rig->rig.size(), "camera index out of range");
    const mvt::Vec2 px = mvt::project_point(rig->rig.cameras[camera], vec3(xyz));
    out_px[0] = px.x();
    out_px[1] = px.y();
  });
}

mvt_status mvt_rig_triangulate(const mvt_rig* rig, size_t n_views, const size_t* cameras, const double* pixels,
                               const double* confidences, double min_confidence, double inlier_threshold_px,
                               double out_xyz[3], double* out_px_error) {
  return guarded([&] {
    require(rig && cameras && pixels && out_xyz, "null argument");
    std::vector<mvt::View> views;
    for (size_t i = 0; i < n_views; ++i) {
      require(cameras[i] < rig->rig.size(), "camera index out of range");
      views.push_back({cameras[i], {pixels[2 * i], pixels[2 * i + 1]}, confidences ? confidences[i] : 1.0});
    }
    const auto pt = mvt::triangulate_ransac(rig->rig, views, {min_confidence, inlier_threshold_px});
    out_xyz[0] = pt.position.x();
    out_xyz[1] = pt.position.y();
    out_xyz[2] = pt.position.z();
    if (out_px_error) *out_px_error = pt.mean_error_px();
  });
}

mvt_status mvt_ldj(size_t n, const double* xyz, double dt, double* out) {
  return guarded([&] {
    require(xyz && out, "null argument");
    require(dt > 0.0, "dt must be positive");
    mvt::Trajectory3D traj;
    traj.source_fps = 1.0 / dt;
    for (size_t i = 0; i < n; ++i) {
      traj.t.push_back(static_cast<double>(i) * dt);
      traj.p.emplace_back(vec3(xyz + 3 * i));
    }
    *out = mvt::ldj(traj);
  });
}

mvt_status mvt_icc_a1(size_t n_subjects, size_t n_conditions, const double* row_major, double* out) {
  return guarded([&] {
    require(row_major && out, "null argument");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n_subjects), static_cast<Eigen::Index>(n_conditions));
    for (size_t i = 0; i < n_subjects; ++i)
      for (size_t j = 0; j < n_conditions; ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row_major[i * n_conditions + j];
    *out = mvt::icc_a1(m);
  });
}

mvt_status mvt_joint_angle(const double a[3], const double b[3], const double c[3], double* out_deg) {
  return guarded([&] {
    require(a && b && c && out_deg, "null argument");
    *out_deg = mvt::joint_angle(vec3(a), vec3(b), vec3(c));
  });
}

mvt_status mvt_hull_volume(size_t n, const double* xyz, double* out) {
  return guarded([&] {
    require(xyz && out, "null argument");
    std::vector<mvt::Vec3> pts;
    for (size_t i = 0; i < n; ++i) pts.push_back(vec3(xyz + 3 * i));
    *out = mvt::hull_volume(pts);
  });
}

mvt_status mvt_config_new(const char* dataset_root, const char* saving_dir, mvt_config** out) {
  return guarded([&] {
    require(dataset_root && saving_dir && out, "null argument");
    mvt::PipelineConfig c;
    c.dataset_root = dataset_root;
    c.saving_dir = saving_dir;
    c.validate();
    *out = new mvt_config{c};
  });
}

mvt_status mvt_config_load(const char* path, mvt_config** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new mvt_config{mvt::PipelineConfig::load(path)};
  });
}

mvt_status mvt_config_save(const mvt_config* config, const char* path) {
  return guarded([&] {
    require(config && path, "null argument");
    config->config.save(path);
  });
}

mvt_status mvt_config_set(mvt_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config && key && value, "null argument");
    config->config.set(key, value);
  });
}

void mvt_config_free(mvt_config* config) { delete config; }

mvt_status mvt_run_step(const mvt_config* config, const char* step) {
  return guarded([&] {
    require(config && step, "null argument");
    mvt::Pipeline(config->config).run(mvt::parse_step(step));
  });
}

mvt_status mvt_trim_manual(const mvt_config* config, int start, int end, const char* trial_filter) {
  return guarded([&] {
    require(config != nullptr, "null argument");
    mvt::ManualTrim m;
    m.start = start;
    if (end >= 0) m.end = end;
    if (trial_filter) m.trial_filter = trial_filter;
    mvt::Pipeline(config->config).trim_manual(m);
  });
}

mvt_status mvt_synth_fixture(const char* dir, int n_cams, int n_subjects, double noise_px, unsigned long long seed) {
  return guarded([&] {
    require(dir != nullptr, "null argument");
    mvt::FixtureOptions o;
    o.n_cams = n_cams;
    o.n_subjects = n_subjects;
    o.noise_px = noise_px;
    o.seed = seed;
    mvt::write_fixture(dir, o);
  });
}

}  // extern "C"
