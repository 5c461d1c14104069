#include "ngrasp/servo.hpp"

#include <cmath>

namespace ngrasp::servo {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Home: return "Home";
    case Phase::Follow: return "Follow";
    case Phase::Approach: return "Approach";
    case Phase::Grasp: return "Grasp";
    case Phase::Return: return "Return";
    case Phase::Done: return "Done";
    case Phase::Aborted: return "Aborted";
  }
  return "?";
}

bool legal_transition(Phase from, Phase to) {
  if (to == Phase::Aborted) return from != Phase::Aborted;
  switch (from) {
    case Phase::Home: return to == Phase::Follow;
    case Phase::Follow: return to == Phase::Approach;
    case Phase::Approach: return to == Phase::Grasp;
    case Phase::Grasp: return to == Phase::Return;
    case Phase::Return: return to == Phase::Done;
    default: return false;
  }
}

const char* outcome_name(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Success: return "Success";
    case OutcomeKind::Miss: return "Miss";
    case OutcomeKind::Fail: return "Fail";
  }
  return "?";
}

Outcome classify_outcome(const Point3& final_tip, const Point3& needle_middle,
                         bool grip_closed_on_needle, double miss_threshold_mm,
                         double fail_threshold_mm) {
  (void)miss_threshold_mm;  // the miss band upper edge is the fail threshold
  Outcome out;
  out.final_tip_error_mm = (needle_middle - final_tip).norm();
  out.captured = grip_closed_on_needle;
  if (grip_closed_on_needle) {
    out.kind = OutcomeKind::Success;
  } else if (out.final_tip_error_mm < fail_threshold_mm) {
    out.kind = OutcomeKind::Miss;
  } else {
    out.kind = OutcomeKind::Fail;
  }
  return out;
}

void ServoConfig::validate() const {
  if (standoff_mm <= 0.0) throw ConfigError("servo: standoff must be positive");
  if (standoff_dir_ws.norm() < 1e-9) throw ConfigError("servo: standoff direction must be nonzero");
  if (settle_window < 2) throw ConfigError("servo: settle_window must be >= 2");
  if (settle_eps_mm <= 0.0) throw ConfigError("servo: settle_eps must be positive");
  if (waypoint_tol_mm <= 0.0) throw ConfigError("servo: waypoint tolerance must be positive");
  if (capture_radius_mm <= 0.0) throw ConfigError("servo: capture radius must be positive");
  if (tau_joint_s <= 0.0) throw ConfigError("servo: joint time constant must be positive");
  if (stale_timeout_s <= 0.0) throw ConfigError("servo: stale timeout must be positive");
  if (miss_threshold_mm <= 0.0 || fail_threshold_mm <= miss_threshold_mm) {
    throw ConfigError("servo: outcome thresholds must satisfy 0 < miss < fail");
  }
  if (revolute_rate <= 0.0 || insertion_rate_mm_s <= 0.0 || grip_rate <= 0.0) {
    throw ConfigError("servo: rate limits must be positive");
  }
}

Eigen::Vector3d compute_error(const TrackedPoint& measured, double now, double tracker_period,
                              const Point3& tool_tip_ws, const Eigen::Vector3d& offset_ws) {
  if (now - measured.t > 2.0 * tracker_period) {
    throw StaleEstimate("compute_error: measurement older than two tracker periods");
  }
  return (measured.p_ws + offset_ws) - tool_tip_ws;
}

namespace {

// Target jaw orientation in /ws: x along the needle tangent (tail -> tip),
// z along the plane normal on the approach side, y completing the frame.
Eigen::Matrix3d grasp_orientation_ws(const perception::NeedleGeometry& geo,
                                     const Eigen::Vector3d& standoff_dir, bool flip_tangent) {
  Eigen::Vector3d n_up = geo.plane.normal;
  if (standoff_dir.dot(n_up) < 0.0) n_up = -n_up;
  Eigen::Vector3d x = flip_tangent ? Eigen::Vector3d(-geo.tangent_at_middle)
                                   : Eigen::Vector3d(geo.tangent_at_middle);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = n_up.cross(x);
  r.col(2) = n_up;
  return r;
}

}  // namespace

GraspPlan plan_grasp(const std::array<Point3, 3>& markers_ws, const KinematicChain& chain,
                     const RigidTransform& rc_from_ws, const ServoConfig& cfg) {
  const perception::NeedleGeometry geo = perception::needle_plane_and_grasp_geometry(markers_ws);

  const Point3 middle = markers_ws[perception::kMiddle];
  const Point3 grasp_ws = middle - geo.plane.signed_distance(middle) * geo.plane.normal;

  GraspPlan plan;
  plan.grasp_point_ws = grasp_ws;
  plan.p_pl = geometry::apply(rc_from_ws, grasp_ws);
  plan.positioning =
      kinematics::select_solution(kinematics::ik_analytic_position(plan.p_pl, &chain.limits),
                                  chain.limits);
  plan.grip_open = cfg.grip_open;
  plan.approach_standoff_mm = cfg.standoff_mm;

  Eigen::Vector3d n_up = geo.plane.normal;
  if (cfg.standoff_dir_ws.dot(n_up) < 0.0) n_up = -n_up;
  plan.approach_dir_ws = -n_up;

  // Wrist angles by orientation-only DLS; tight tolerance so the alignment
  // invariant holds well under 1e-6 rad. The tangent sign is retried flipped
  // when the roll limit blocks the first choice (alignment is direction
  // agnostic).
  kinematics::DlsSettings wrist_settings = cfg.dls;
  wrist_settings.tol_rot_rad = 1e-9;
  wrist_settings.max_iter = 400;
  JointVector seed = plan.positioning;
  seed.grip = cfg.grip_open;

  for (int attempt = 0; attempt < 2; ++attempt) {
    const Eigen::Matrix3d target_ws =
        grasp_orientation_ws(geo, cfg.standoff_dir_ws, /*flip_tangent=*/attempt == 1);
    const Eigen::Matrix3d target_rc = rc_from_ws.rotation * target_ws;
    try {
      const kinematics::IkResult wrist =
          kinematics::ik_wrist_orientation(chain, target_rc, seed, wrist_settings);
      plan.target_rotation_rc = target_rc;
      plan.full = wrist.joints;
      plan.full.grip = cfg.grip_open;
      return plan;
    } catch (const kinematics::NoConvergence&) {
      if (attempt == 1) {
        throw NoFeasibleSolution("plan_grasp: wrist cannot reach the aligned orientation");
      }
    }
  }
  throw NoFeasibleSolution("plan_grasp: unreachable");
}

ServoController::ServoController(KinematicChain chain, camera::StereoRig rig_estimate,
                                 CalibratedFrames frames, perception::RateConfig rates,
                                 ServoConfig cfg)
    : chain_(std::move(chain)),
      rig_(std::move(rig_estimate)),
      frames_(std::move(frames)),
      ws_from_rc_(geometry::invert(frames_.rc_from_ws)),
      rates_(rates),
      cfg_(cfg) {
  chain_.validate();
  rig_.validate();
  rates_.validate();
  cfg_.validate();
}

JointVector ServoController::home_joints() const {
  JointVector home;
  home.d3 = cfg_.home_d3_mm;
  home.grip = cfg_.grip_open;
  return home;
}

ServoState ServoController::make_initial_state() const {
  ServoState state;
  state.joints = home_joints();
  state.command = state.joints;
  state.transitions.push_back({0.0, Phase::Home});
  return state;
}

Point3 ServoController::tip_ws(const JointVector& joints) const {
  return geometry::apply(ws_from_rc_, kinematics::forward(chain_, joints).tip);
}

void ServoController::ingest_detections(ServoState& state,
                                        std::span<const MarkerDetection> detections) {
  if (detections.empty()) return;
  const auto reconstructed = perception::reconstruct_markers(detections, rig_);
  for (const auto& marker : reconstructed) {
    if (marker.marker_id < 0 || marker.marker_id > 2) continue;
    const TrackedPoint tp{marker.p_ws, marker.t};
    marker_estimates_[marker.marker_id] = tp;
    // settle_window counts update intervals, so the ring holds one more
    // sample: W intervals span exactly W tracker periods.
    const size_t capacity = static_cast<size_t>(cfg_.settle_window) + 1;
    auto& window = marker_windows_[marker.marker_id];
    window.push_back(tp);
    while (window.size() > capacity) window.pop_front();
    if (marker.marker_id == perception::kMiddle) {
      state.middle_estimate = tp;
      settle_window_.push_back(tp);
      while (settle_window_.size() > capacity) settle_window_.pop_front();
    }
  }
}

bool ServoController::estimate_stale(const ServoState& state, double t) const {
  const double last = state.middle_estimate ? state.middle_estimate->t : 0.0;
  return t - last > cfg_.stale_timeout_s;
}

void ServoController::transition(ServoState& state, Phase to, double t) {
  state.phase = to;
  state.transitions.push_back({t, to});
}

void ServoController::abort(ServoState& state, double t, const std::string& reason) {
  state.abort_reason = reason;
  transition(state, Phase::Aborted, t);
}

void ServoController::command_pose(ServoState& state, const Point3& target_ws,
                                   const Eigen::Matrix3d& target_rotation_rc) {
  RigidTransform target;
  target.rotation = target_rotation_rc;
  target.translation = geometry::apply(frames_.rc_from_ws, target_ws);
  const double grip = state.command.grip;
  try {
    const kinematics::IkResult res = ik_iterative(chain_, target, state.command, cfg_.dls);
    state.command = res.joints;
  } catch (const kinematics::NoConvergence& e) {
    // Track the best iterate; the target may simply be far this step.
    state.command = e.best().joints;
  }
  state.command.grip = grip;
}

void ServoController::track_command(ServoState& state, double dt) const {
  const double alpha = 1.0 - std::exp(-dt / cfg_.tau_joint_s);
  const auto track = [&](double actual, double cmd, double rate) {
    double delta = (cmd - actual) * alpha;
    const double max_step = rate * dt;
    delta = std::clamp(delta, -max_step, max_step);
    return actual + delta;
  };
  JointVector& q = state.joints;
  const JointVector& c = state.command;
  q.theta1 = track(q.theta1, c.theta1, cfg_.revolute_rate);
  q.theta2 = track(q.theta2, c.theta2, cfg_.revolute_rate);
  q.d3 = track(q.d3, c.d3, cfg_.insertion_rate_mm_s);
  q.theta4 = track(q.theta4, c.theta4, cfg_.revolute_rate);
  q.theta5 = track(q.theta5, c.theta5, cfg_.revolute_rate);
  q.theta6 = track(q.theta6, c.theta6, cfg_.revolute_rate);
  q.grip = track(q.grip, c.grip, cfg_.grip_rate);
}

void ServoController::step(ServoState& state, std::span<const MarkerDetection> detections,
                           double t, double dt) {
  state.grip_closed_event = false;  // one-step event, see ServoState
  ingest_detections(state, detections);
  state.tip_ws_estimate = tip_ws(state.joints);

  switch (state.phase) {
    case Phase::Home: {
      state.command = home_joints();
      if (state.middle_estimate) {
        transition(state, Phase::Follow, t);
      } else if (estimate_stale(state, t)) {
        abort(state, t, "no needle estimate within the stale timeout");
        break;
      }
      break;
    }
    case Phase::Follow: {
      if (estimate_stale(state, t)) {
        abort(state, t, "needle estimate stale beyond timeout");
        break;
      }
      const double fresh_window = 2.0 * rates_.tracker_period();
      if (state.middle_estimate && t - state.middle_estimate->t <= fresh_window) {
        const Eigen::Vector3d offset = cfg_.standoff_mm * cfg_.standoff_dir_ws;
        state.last_error_ws = compute_error(*state.middle_estimate, t, rates_.tracker_period(),
                                            state.tip_ws_estimate, offset);

        // Pre-align the wrist with the current needle geometry when all three
        // markers are in hand; otherwise keep the previous orientation target.
        if (marker_estimates_[0] && marker_estimates_[1] && marker_estimates_[2]) {
          try {
            const perception::NeedleGeometry geo = perception::needle_plane_and_grasp_geometry(
                {marker_estimates_[0]->p_ws, marker_estimates_[1]->p_ws,
                 marker_estimates_[2]->p_ws});
            state.follow_rotation_rc =
                frames_.rc_from_ws.rotation *
                grasp_orientation_ws(geo, cfg_.standoff_dir_ws, false);
          } catch (const Error&) {
            // Degenerate snapshot; reuse the last orientation target.
          }
        }
        const Point3 target_ws = state.tip_ws_estimate + state.last_error_ws;
        command_pose(state, target_ws, state.follow_rotation_rc);
      }

      if (settle_window_.size() == static_cast<size_t>(cfg_.settle_window) + 1) {
        double max_disp = 0.0;
        for (size_t i = 0; i < settle_window_.size(); ++i) {
          for (size_t j = i + 1; j < settle_window_.size(); ++j) {
            max_disp = std::max(max_disp,
                                (settle_window_[i].p_ws - settle_window_[j].p_ws).norm());
          }
        }
        if (max_disp < cfg_.settle_eps_mm &&
            marker_estimates_[0] && marker_estimates_[1] && marker_estimates_[2]) {
          // Plan from the settle-window average of each marker estimate.
          std::array<Point3, 3> markers;
          const double window_start = settle_window_.front().t;
          for (int id = 0; id < 3; ++id) markers[id] = marker_estimates_[id]->p_ws;
          if (!marker_windows_[0].empty() && !marker_windows_[1].empty() &&
              !marker_windows_[2].empty()) {
            for (int id = 0; id < 3; ++id) {
              Point3 sum = Point3::Zero();
              int count = 0;
              for (const auto& tp : marker_windows_[id]) {
                if (tp.t >= window_start) {
                  sum += tp.p_ws;
                  ++count;
                }
              }
              if (count > 0) markers[id] = sum / count;
            }
          }
          try {
            state.plan = plan_grasp(markers, chain_, frames_.rc_from_ws, cfg_);
            approach_leg_ = 0;
            transition(state, Phase::Approach, t);
          } catch (const Error& e) {
            abort(state, t, std::string("grasp planning failed: ") + e.what());
          }
        }
      }
      break;
    }
    case Phase::Approach: {
      if (estimate_stale(state, t)) {
        abort(state, t, "needle estimate stale beyond timeout");
        break;
      }
      const GraspPlan& plan = *state.plan;
      const Eigen::Vector3d up = -plan.approach_dir_ws;
      const std::array<Point3, 3> waypoints = {
          plan.grasp_point_ws + cfg_.standoff_mm * up,
          plan.grasp_point_ws + cfg_.approach_mid_standoff_mm * up,
          plan.grasp_point_ws,
      };
      const Point3& waypoint = waypoints[static_cast<size_t>(approach_leg_)];
      state.last_error_ws = waypoint - state.tip_ws_estimate;

      // The wrist holds the planned angles; only the positioning joints
      // steer. Re-running the damped iteration here can fall into a roll
      // basin different from the plan's and hang against a joint limit.
      try {
        const kinematics::AnalyticSolutions solutions = kinematics::ik_analytic_position(
            geometry::apply(frames_.rc_from_ws, waypoint), &chain_.limits);
        const JointVector pos = kinematics::select_solution(solutions, chain_.limits);
        state.command.theta1 = pos.theta1;
        state.command.theta2 = pos.theta2;
        state.command.d3 = pos.d3;
        state.command.theta4 = plan.full.theta4;
        state.command.theta5 = plan.full.theta5;
        state.command.theta6 = plan.full.theta6;
      } catch (const Error& e) {
        abort(state, t, std::string("approach waypoint infeasible: ") + e.what());
        break;
      }
      if ((state.tip_ws_estimate - waypoint).norm() < cfg_.waypoint_tol_mm) {
        if (approach_leg_ < 2) {
          ++approach_leg_;
        } else {
          transition(state, Phase::Grasp, t);
        }
      }
      break;
    }
    case Phase::Grasp: {
      // Joints hold the dock command; only the grip ramps shut.
      state.command.grip = 0.0;
      if (state.joints.grip <= cfg_.grip_closed_eps) {
        state.grip_closed_event = true;
        state.closure_time = t;
        transition(state, Phase::Return, t);
      }
      break;
    }
    case Phase::Return: {
      JointVector home = home_joints();
      home.grip = 0.0;  // keep holding whatever was grasped
      state.command = home;
      const kinematics::Vector6 diff = state.joints.pose_joints() - home.pose_joints();
      const bool angles_home = std::abs(diff[0]) < 0.01 && std::abs(diff[1]) < 0.01 &&
                               std::abs(diff[3]) < 0.01 && std::abs(diff[4]) < 0.01 &&
                               std::abs(diff[5]) < 0.01;
      if (angles_home && std::abs(diff[2]) < 0.5) {
        transition(state, Phase::Done, t);
      }
      break;
    }
    case Phase::Done:
    case Phase::Aborted:
      return;  // terminal, joints hold
  }

  track_command(state, dt);
}

}  // namespace ngrasp::servo
