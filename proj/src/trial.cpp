#include "ngrasp/trial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

namespace ngrasp::harness {

namespace {

using geometry::Point3;
using perception::NeedleState;

constexpr double kDegToRad = M_PI / 180.0;

/// Piecewise-linear needle motion: center and in-plane rotation over time.
struct NeedleTrajectory {
  double radius = 12.0;
  std::array<double, 3> marker_angles_rad = {0.7, 0.0, -0.7};
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  std::vector<MotionWaypoint> script;  // at least one entry, times ascending

  NeedleState at(double t) const {
    Eigen::Vector3d center = script.front().center;
    double yaw_deg = script.front().yaw_deg;
    if (t >= script.back().t) {
      center = script.back().center;
      yaw_deg = script.back().yaw_deg;
    } else {
      for (size_t i = 0; i + 1 < script.size(); ++i) {
        if (t >= script[i].t && t < script[i + 1].t) {
          const double span = script[i + 1].t - script[i].t;
          const double a = span > 0.0 ? (t - script[i].t) / span : 1.0;
          center = (1.0 - a) * script[i].center + a * script[i + 1].center;
          yaw_deg = (1.0 - a) * script[i].yaw_deg + a * script[i + 1].yaw_deg;
          break;
        }
      }
    }
    return perception::make_needle(center, normal, radius, marker_angles_rad,
                                   yaw_deg * kDegToRad);
  }
};

NeedleTrajectory build_trajectory(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  const NeedleConfig& nc = cfg.needle;
  NeedleTrajectory traj;
  traj.radius = nc.radius_mm;
  for (int i = 0; i < 3; ++i) traj.marker_angles_rad[i] = nc.marker_angles_deg[i] * kDegToRad;

  Eigen::Vector3d center = nc.start_center_ws;
  double yaw_deg = nc.start_rpy_deg.z();
  traj.normal = geometry::RigidTransform::from_rpy(nc.start_rpy_deg.x() * kDegToRad,
                                                   nc.start_rpy_deg.y() * kDegToRad, 0.0)
                    .rotation *
                Eigen::Vector3d::UnitZ();

  if (nc.randomize_start) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int i = 0; i < 3; ++i) {
      center[i] = nc.random_center_min[i] +
                  u01(rng) * (nc.random_center_max[i] - nc.random_center_min[i]);
    }
    yaw_deg = (2.0 * u01(rng) - 1.0) * nc.random_yaw_deg;
    const double tilt = u01(rng) * nc.random_tilt_deg * kDegToRad;
    const double dir = u01(rng) * 2.0 * M_PI;
    const Eigen::Vector3d axis(std::cos(dir), std::sin(dir), 0.0);
    traj.normal = Eigen::AngleAxisd(tilt, axis) * Eigen::Vector3d::UnitZ();
  }

  if (nc.motion_type == "stationary") {
    traj.script.push_back({0.0, center, yaw_deg});
  } else if (nc.motion_type == "script") {
    traj.script = nc.script;
    std::sort(traj.script.begin(), traj.script.end(),
              [](const MotionWaypoint& a, const MotionWaypoint& b) { return a.t < b.t; });
  } else {  // random_walk
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    traj.script.push_back({0.0, center, yaw_deg});
    const RandomWalkConfig& rw = nc.random_walk;
    std::vector<double> times;
    for (int i = 0; i < rw.waypoints; ++i) {
      times.push_back((0.25 + 0.75 * u01(rng)) * rw.duration_s * (i + 1) /
                      static_cast<double>(rw.waypoints));
    }
    std::sort(times.begin(), times.end());
    for (int i = 0; i < rw.waypoints; ++i) {
      Eigen::Vector3d c;
      for (int k = 0; k < 3; ++k) {
        c[k] = rw.box_min[k] + u01(rng) * (rw.box_max[k] - rw.box_min[k]);
      }
      const double wp_yaw = yaw_deg + (2.0 * u01(rng) - 1.0) * 45.0;
      traj.script.push_back({times[static_cast<size_t>(i)], c, wp_yaw});
    }
  }
  return traj;
}

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

}  // namespace

Quartiles quartiles_of(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  const auto at = [&](double q) {
    const double pos = q * (static_cast<double>(values.size()) - 1.0);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  return {values.front(), at(0.25), at(0.5), at(0.75), values.back()};
}

TrialResult run_trial(const ScenarioConfig& cfg, uint64_t seed, int trial_id) {
  std::mt19937_64 rng(seed);

  const camera::StereoRig true_rig = cfg.rig.build();
  const kinematics::KinematicChain chain = cfg.chain.build();
  const geometry::RigidTransform ws_from_rc_true = geometry::invert(chain.rc_from_ws);

  const servo::CalibratedFrames frames = calibrate_frames(cfg, rng);
  camera::StereoRig servo_rig = true_rig;  // intrinsics and baseline are known
  servo_rig.ee_from_ws = frames.ee_from_ws;

  const NeedleTrajectory trajectory = build_trajectory(cfg, rng);

  perception::ObservationStream stream(cfg.rates, cfg.noise.tracker_noise(), rng());
  servo::ServoController controller(chain, servo_rig, frames, cfg.rates, cfg.servo);
  servo::ServoState state = controller.make_initial_state();

  TrialResult result;
  result.trial_id = trial_id;
  result.seed = seed;

  const double dt = 1.0 / cfg.rates.control_hz;
  bool captured = false;
  bool closure_seen = false;
  Point3 closure_tip = Point3::Zero();
  Point3 closure_needle = Point3::Zero();

  double t = 0.0;
  long long step_index = 0;
  while (t < cfg.max_duration_s) {
    t = static_cast<double>(++step_index) * dt;
    const NeedleState needle = trajectory.at(t);
    const auto detections = stream.observe(needle, true_rig, t);
    for (const auto& det : detections) result.detections.push_back(det);

    controller.step(state, detections, t, dt);

    const Point3 tip_true =
        geometry::apply(ws_from_rc_true, kinematics::forward(chain, state.joints).tip);

    if (state.grip_closed_event && !closure_seen) {
      closure_seen = true;
      closure_tip = tip_true;
      closure_needle = needle.middle_marker();
      captured = needle.circle.distance_to(tip_true) <= cfg.servo.capture_radius_mm;
    }

    TraceRow row;
    row.trial_id = trial_id;
    row.t = t;
    row.phase = state.phase;
    row.tip_ws = tip_true;
    row.needle_ws = needle.middle_marker();
    row.error_ws = state.last_error_ws;
    row.d3 = state.joints.d3;
    result.trace.push_back(row);

    if (state.phase == servo::Phase::Done || state.phase == servo::Phase::Aborted) break;
  }

  const NeedleState final_needle = trajectory.at(t);
  const Point3 final_tip =
      closure_seen ? closure_tip
                   : geometry::apply(ws_from_rc_true, kinematics::forward(chain, state.joints).tip);
  const Point3 final_needle_mid =
      closure_seen ? closure_needle : final_needle.middle_marker();

  result.outcome = servo::classify_outcome(final_tip, final_needle_mid, captured,
                                           cfg.servo.miss_threshold_mm,
                                           cfg.servo.fail_threshold_mm);
  if (state.phase == servo::Phase::Aborted) {
    result.outcome.kind = servo::OutcomeKind::Fail;
    result.outcome.abort_reason = state.abort_reason;
  } else if (state.phase != servo::Phase::Done) {
    result.outcome.kind = servo::OutcomeKind::Fail;
    result.outcome.abort_reason = "trial exceeded max_duration_s";
  }
  result.per_axis_error_mm = (final_needle_mid - final_tip).cwiseAbs();
  result.task_time_s = t;
  result.transitions = state.transitions;
  return result;
}

BatchReport run_batch(const ScenarioConfig& cfg, int n) {
  if (n < 1) throw ConfigError("run_batch: need at least one trial");
  BatchReport report;
  report.n_trials = n;
  std::vector<double> ex, ey, ez;
  double error_sum = 0.0, time_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    TrialResult trial = run_trial(cfg, derive_seed(cfg.seed, static_cast<uint64_t>(i)), i);
    switch (trial.outcome.kind) {
      case servo::OutcomeKind::Success: ++report.success; break;
      case servo::OutcomeKind::Miss: ++report.miss; break;
      case servo::OutcomeKind::Fail: ++report.fail; break;
    }
    ex.push_back(trial.per_axis_error_mm.x());
    ey.push_back(trial.per_axis_error_mm.y());
    ez.push_back(trial.per_axis_error_mm.z());
    error_sum += trial.outcome.final_tip_error_mm;
    time_sum += trial.task_time_s;
    report.trials.push_back(std::move(trial));
  }
  report.axis_x = quartiles_of(ex);
  report.axis_y = quartiles_of(ey);
  report.axis_z = quartiles_of(ez);
  report.mean_terminal_error_mm = error_sum / n;
  report.mean_task_time_s = time_sum / n;
  return report;
}

std::string trace_csv(std::span<const TrialResult> trials) {
  std::string out = "# ngrasp-trace-v1\n";
  out +=
      "trial_id,t,phase,tip_x_mm,tip_y_mm,tip_z_mm,needle_x_mm,needle_y_mm,needle_z_mm,"
      "e_x_mm,e_y_mm,e_z_mm,d3_mm,outcome\n";
  for (const auto& trial : trials) {
    for (size_t i = 0; i < trial.trace.size(); ++i) {
      const TraceRow& row = trial.trace[i];
      out += std::to_string(row.trial_id);
      out += ',' + format_double(row.t, 4);
      out += ',';
      out += servo::phase_name(row.phase);
      for (int k = 0; k < 3; ++k) out += ',' + format_double(row.tip_ws[k], 6);
      for (int k = 0; k < 3; ++k) out += ',' + format_double(row.needle_ws[k], 6);
      for (int k = 0; k < 3; ++k) out += ',' + format_double(row.error_ws[k], 6);
      out += ',' + format_double(row.d3, 6);
      out += ',';
      if (i + 1 == trial.trace.size()) out += servo::outcome_name(trial.outcome.kind);
      out += '\n';
    }
  }
  return out;
}

std::string detections_csv(std::span<const TrialResult> trials) {
  std::string out = "# ngrasp-detections-v1\n";
  out += "trial_id,t,marker_id,u_l,v_l,u_r,v_r\n";
  for (const auto& trial : trials) {
    for (const auto& det : trial.detections) {
      out += std::to_string(trial.trial_id);
      out += ',' + format_double(det.t, 4);
      out += ',' + std::to_string(det.marker_id);
      out += ',' + format_double(det.left.u, 6) + ',' + format_double(det.left.v, 6);
      out += ',' + format_double(det.right.u, 6) + ',' + format_double(det.right.v, 6);
      out += '\n';
    }
  }
  return out;
}

namespace {

nlohmann::ordered_json quartiles_json(const Quartiles& q) {
  return {{"min", q.min}, {"q1", q.q1}, {"median", q.median}, {"q3", q.q3}, {"max", q.max}};
}

}  // namespace

std::string batch_report_json(const BatchReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = "ngrasp-batch-v1";
  j["n_trials"] = report.n_trials;
  j["counts"] = {{"success", report.success}, {"miss", report.miss}, {"fail", report.fail}};
  j["mean_terminal_error_mm"] = report.mean_terminal_error_mm;
  j["mean_task_time_s"] = report.mean_task_time_s;
  j["per_axis_error_quartiles_mm"] = {{"x", quartiles_json(report.axis_x)},
                                      {"y", quartiles_json(report.axis_y)},
                                      {"z", quartiles_json(report.axis_z)}};
  nlohmann::ordered_json trials = nlohmann::ordered_json::array();
  for (const auto& trial : report.trials) {
    trials.push_back({{"trial_id", trial.trial_id},
                      {"seed", trial.seed},
                      {"outcome", servo::outcome_name(trial.outcome.kind)},
                      {"captured", trial.outcome.captured},
                      {"terminal_error_mm", trial.outcome.final_tip_error_mm},
                      {"task_time_s", trial.task_time_s},
                      {"abort_reason", trial.outcome.abort_reason}});
  }
  j["trials"] = std::move(trials);
  return j.dump(2) + "\n";
}

std::string calibration_report_json(const CalibrationReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = "ngrasp-calibration-v1";
  nlohmann::ordered_json planes = nlohmann::ordered_json::array();
  const char* names[3] = {"z0", "x0", "y0"};
  for (int i = 0; i < 3; ++i) {
    planes.push_back({{"plane", names[i]},
                      {"d_mean_mm", report.planes[static_cast<size_t>(i)].d_mean_mm},
                      {"max_abs_mm", report.planes[static_cast<size_t>(i)].max_abs_mm}});
  }
  j["plane_scans"] = std::move(planes);
  j["registration"] = {{"translation_error_mm", report.registration.translation_error_mm},
                       {"rotation_error_rad", report.registration.rotation_error_rad},
                       {"rms_residual_mm", report.registration.rms_residual_mm},
                       {"mapped_mean_error_mm", report.registration.mapped_mean_error_mm}};
  j["extrinsics"] = {{"translation_error_mm", report.extrinsics.translation_error_mm},
                     {"rotation_error_rad", report.extrinsics.rotation_error_rad},
                     {"mapped_corner_mean_mm", report.extrinsics.mapped_corner_mean_mm},
                     {"reprojection_rms_px", report.extrinsics.estimate.reprojection_rms_px}};
  return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("write_file: cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
  }
  fs::rename(tmp, target);
}

}  // namespace ngrasp::harness
