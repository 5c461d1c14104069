#include "ngrasp/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>

namespace ngrasp::harness {

using nlohmann::json;

namespace {

constexpr double kDegToRad = M_PI / 180.0;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config " + path + ": " + what);
}

/// Wraps one JSON object; every accessed key is recorded and finish() rejects
/// the rest, so new keys cannot silently pass through.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(path_ + "." + key, e.what());
    }
  }

  void read_vec3(const char* key, Eigen::Vector3d& out) {
    std::array<double, 3> a = {out.x(), out.y(), out.z()};
    read(key, a);
    out = {a[0], a[1], a[2]};
  }

  std::optional<ObjectReader> sub(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return ObjectReader(j_.at(key), path_ + "." + key);
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.contains(item.key())) fail(path_, "unknown key '" + item.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void load_rates(ObjectReader r, perception::RateConfig& rates) {
  r.read("camera_hz", rates.camera_hz);
  r.read("tracker_hz", rates.tracker_hz);
  r.read("control_hz", rates.control_hz);
  r.finish();
}

void load_rig(ObjectReader r, RigConfig& rig) {
  r.read("fx", rig.intrinsics.fx);
  r.read("fy", rig.intrinsics.fy);
  r.read("cx", rig.intrinsics.cx);
  r.read("cy", rig.intrinsics.cy);
  r.read("image_width", rig.intrinsics.width);
  r.read("image_height", rig.intrinsics.height);
  r.read("baseline_mm", rig.baseline_mm);
  r.read_vec3("ee_position_ws", rig.ee_position_ws);
  r.read_vec3("ee_look_at_ws", rig.ee_look_at_ws);
  r.read_vec3("ee_up_hint_ws", rig.ee_up_hint_ws);
  r.finish();
}

void load_limits(ObjectReader r, kinematics::JointLimits& lim) {
  const auto range = [&](const char* key, double& lo, double& hi, double to_internal) {
    std::array<double, 2> v = {lo / to_internal, hi / to_internal};
    r.read(key, v);
    lo = v[0] * to_internal;
    hi = v[1] * to_internal;
  };
  range("theta1_deg", lim.theta1_min, lim.theta1_max, kDegToRad);
  range("theta2_deg", lim.theta2_min, lim.theta2_max, kDegToRad);
  range("d3_mm", lim.d3_min, lim.d3_max, 1.0);
  range("theta4_deg", lim.theta4_min, lim.theta4_max, kDegToRad);
  range("theta5_deg", lim.theta5_min, lim.theta5_max, kDegToRad);
  range("theta6_deg", lim.theta6_min, lim.theta6_max, kDegToRad);
  range("grip_deg", lim.grip_min, lim.grip_max, kDegToRad);
  r.finish();
}

void load_chain(ObjectReader r, ChainConfig& chain) {
  r.read_vec3("rc_position_ws", chain.rc_position_ws);
  r.read_vec3("rc_rpy_deg", chain.rc_rpy_deg);
  r.read("wrist_length_mm", chain.wrist_length_mm);
  r.read("jaw_length_mm", chain.jaw_length_mm);
  if (auto sub = r.sub("limits")) load_limits(std::move(*sub), chain.limits);
  r.finish();
}

void load_dls(ObjectReader r, kinematics::DlsSettings& dls) {
  r.read("lambda", dls.lambda);
  r.read("tol_mm", dls.tol_mm);
  r.read("tol_rot_rad", dls.tol_rot_rad);
  r.read("max_iter", dls.max_iter);
  r.read("step_clamp", dls.step_clamp);
  r.read("scale_mm", dls.scale_mm);
  r.finish();
}

void load_noise(ObjectReader r, NoiseConfig& noise) {
  r.read("pixel_sigma", noise.pixel_sigma);
  r.read("dropout_prob", noise.dropout_prob);
  r.read("tip_sigma_mm", noise.tip_sigma_mm);
  r.read("corner_sigma_px", noise.corner_sigma_px);
  r.read("ee_sigma_t_mm", noise.ee_sigma_t_mm);
  r.read("ee_sigma_rot_rad", noise.ee_sigma_rot_rad);
  r.read("calibration_noise", noise.calibration_noise);
  r.finish();
}

void load_servo(ObjectReader r, servo::ServoConfig& s) {
  r.read("standoff_mm", s.standoff_mm);
  r.read_vec3("standoff_dir_ws", s.standoff_dir_ws);
  r.read("settle_window", s.settle_window);
  r.read("settle_eps_mm", s.settle_eps_mm);
  r.read("approach_mid_standoff_mm", s.approach_mid_standoff_mm);
  r.read("waypoint_tol_mm", s.waypoint_tol_mm);
  r.read("capture_radius_mm", s.capture_radius_mm);
  double grip_open_deg = s.grip_open / kDegToRad;
  r.read("grip_open_deg", grip_open_deg);
  s.grip_open = grip_open_deg * kDegToRad;
  r.read("tau_joint_s", s.tau_joint_s);
  r.read("stale_timeout_s", s.stale_timeout_s);
  r.read("miss_threshold_mm", s.miss_threshold_mm);
  r.read("fail_threshold_mm", s.fail_threshold_mm);
  r.read("home_d3_mm", s.home_d3_mm);
  double revolute_deg_s = s.revolute_rate / kDegToRad;
  r.read("revolute_rate_deg_s", revolute_deg_s);
  s.revolute_rate = revolute_deg_s * kDegToRad;
  r.read("insertion_rate_mm_s", s.insertion_rate_mm_s);
  double grip_deg_s = s.grip_rate / kDegToRad;
  r.read("grip_rate_deg_s", grip_deg_s);
  s.grip_rate = grip_deg_s * kDegToRad;
  if (auto sub = r.sub("dls")) load_dls(std::move(*sub), s.dls);
  r.finish();
}

void load_waypoint(ObjectReader r, MotionWaypoint& wp) {
  r.read("t", wp.t);
  r.read_vec3("center", wp.center);
  r.read("yaw_deg", wp.yaw_deg);
  r.finish();
}

void load_random_walk(ObjectReader r, RandomWalkConfig& rw) {
  r.read("duration_s", rw.duration_s);
  r.read("waypoints", rw.waypoints);
  r.read_vec3("box_min", rw.box_min);
  r.read_vec3("box_max", rw.box_max);
  r.finish();
}

void load_needle(ObjectReader r, NeedleConfig& needle) {
  r.read("radius_mm", needle.radius_mm);
  r.read("marker_angles_deg", needle.marker_angles_deg);
  r.read_vec3("start_center_ws", needle.start_center_ws);
  r.read_vec3("start_rpy_deg", needle.start_rpy_deg);
  r.read("motion_type", needle.motion_type);
  if (r.has("script")) {
    const json& arr = r.raw("script");
    if (!arr.is_array()) fail("needle.script", "expected an array");
    needle.script.clear();
    for (size_t i = 0; i < arr.size(); ++i) {
      MotionWaypoint wp;
      load_waypoint(ObjectReader(arr[i], "needle.script[" + std::to_string(i) + "]"), wp);
      needle.script.push_back(wp);
    }
  }
  if (auto sub = r.sub("random_walk")) load_random_walk(std::move(*sub), needle.random_walk);
  r.read("randomize_start", needle.randomize_start);
  r.read_vec3("random_center_min", needle.random_center_min);
  r.read_vec3("random_center_max", needle.random_center_max);
  r.read("random_yaw_deg", needle.random_yaw_deg);
  r.read("random_tilt_deg", needle.random_tilt_deg);
  r.finish();
}

void load_calibration(ObjectReader r, CalibrationConfig& cal) {
  r.read("board_rows", cal.board_rows);
  r.read("board_cols", cal.board_cols);
  r.read("square_mm", cal.square_mm);
  r.read("plane_scan_points", cal.plane_scan_points);
  r.read("plane_half_extent_mm", cal.plane_half_extent_mm);
  r.read("registration_points", cal.registration_points);
  r.read("checked_corners", cal.checked_corners);
  r.finish();
}

}  // namespace

camera::StereoRig RigConfig::build() const {
  camera::StereoRig rig;
  rig.left = intrinsics;
  rig.right = intrinsics;
  rig.right_from_left.translation = {-baseline_mm, 0.0, 0.0};
  rig.ee_from_ws =
      geometry::RigidTransform::look_at(ee_position_ws, ee_look_at_ws, ee_up_hint_ws);
  rig.validate();
  return rig;
}

kinematics::KinematicChain ChainConfig::build() const {
  kinematics::KinematicChain chain;
  const geometry::RigidTransform ws_from_rc = geometry::RigidTransform::from_rpy(
      rc_rpy_deg.x() * kDegToRad, rc_rpy_deg.y() * kDegToRad, rc_rpy_deg.z() * kDegToRad,
      rc_position_ws);
  chain.rc_from_ws = geometry::invert(ws_from_rc);
  chain.wrist_length = wrist_length_mm;
  chain.jaw_length = jaw_length_mm;
  chain.limits = limits;
  chain.validate();
  return chain;
}

void ScenarioConfig::validate() const {
  rates.validate();
  rig.build();
  chain.build();
  servo.validate();
  noise.tracker_noise().validate();
  if (trials < 1) throw ConfigError("config: trials must be >= 1");
  if (max_duration_s <= 0.0) throw ConfigError("config: max_duration_s must be positive");
  if (needle.radius_mm <= 0.0) throw ConfigError("config: needle radius must be positive");
  if (needle.motion_type != "stationary" && needle.motion_type != "script" &&
      needle.motion_type != "random_walk") {
    throw ConfigError("config: needle.motion_type must be stationary, script or random_walk");
  }
  if (needle.motion_type == "script" && needle.script.empty()) {
    throw ConfigError("config: scripted motion requires at least one waypoint");
  }
  if (calibration.registration_points < 3) {
    throw ConfigError("config: registration needs at least 3 points");
  }
  if (calibration.checked_corners > calibration.board_rows * calibration.board_cols) {
    throw ConfigError("config: checked_corners exceeds the board corner count");
  }
}

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }

  ScenarioConfig cfg;
  ObjectReader root(j, "$");
  root.read("seed", cfg.seed);
  root.read("trials", cfg.trials);
  root.read("max_duration_s", cfg.max_duration_s);
  if (auto sub = root.sub("rates")) load_rates(std::move(*sub), cfg.rates);
  if (auto sub = root.sub("rig")) load_rig(std::move(*sub), cfg.rig);
  if (auto sub = root.sub("chain")) load_chain(std::move(*sub), cfg.chain);
  if (auto sub = root.sub("noise")) load_noise(std::move(*sub), cfg.noise);
  if (auto sub = root.sub("servo")) load_servo(std::move(*sub), cfg.servo);
  if (auto sub = root.sub("needle")) load_needle(std::move(*sub), cfg.needle);
  if (auto sub = root.sub("calibration")) load_calibration(std::move(*sub), cfg.calibration);
  root.finish();

  cfg.validate();
  return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

uint64_t derive_seed(uint64_t base, uint64_t index) {
  // SplitMix64 over base + index keeps trial streams decorrelated.
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace ngrasp::harness
