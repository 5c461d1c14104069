#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "ngrasp/kinematics.hpp"
#include "ngrasp/perception.hpp"

namespace ngrasp::servo {

using geometry::Point3;
using geometry::RigidTransform;
using kinematics::JointVector;
using kinematics::KinematicChain;
using perception::MarkerDetection;

enum class Phase { Home, Follow, Approach, Grasp, Return, Done, Aborted };

const char* phase_name(Phase p);

/// True when from -> to is an edge of the legal phase graph
/// (Home -> Follow -> Approach -> Grasp -> Return -> Done, any -> Aborted).
bool legal_transition(Phase from, Phase to);

enum class OutcomeKind { Success, Miss, Fail };

struct Outcome {
  OutcomeKind kind = OutcomeKind::Fail;
  double final_tip_error_mm = 0.0;  ///< || needle middle - tip || at closure
  bool captured = false;
  std::string abort_reason;  ///< empty unless the run aborted
};

const char* outcome_name(OutcomeKind k);

/**
 * @brief Classifies one trial.
 *
 * Success iff the grip closed on the needle; otherwise Miss below the fail
 * threshold and Fail at or above it (the band between the miss and fail
 * thresholds also counts as Miss).
 */
Outcome classify_outcome(const Point3& final_tip, const Point3& needle_middle,
                         bool grip_closed_on_needle, double miss_threshold_mm = 4.0,
                         double fail_threshold_mm = 20.0);

/// Behavior knobs of the grasp controller. Distances mm, times s, angles rad.
struct ServoConfig {
  double standoff_mm = 25.0;
  Eigen::Vector3d standoff_dir_ws = Eigen::Vector3d::UnitZ();
  int settle_window = 8;
  double settle_eps_mm = 1.0;
  double approach_mid_standoff_mm = 5.0;
  double waypoint_tol_mm = 0.5;
  double capture_radius_mm = 2.0;
  double grip_open = 45.0 * M_PI / 180.0;
  double grip_closed_eps = 0.02;       // rad, grip below this counts as closed
  double tau_joint_s = 0.02;
  double stale_timeout_s = 1.0;
  double miss_threshold_mm = 4.0;
  double fail_threshold_mm = 20.0;
  double home_d3_mm = 100.0;
  kinematics::DlsSettings dls;
  double revolute_rate = 3.0;          // rad/s
  double insertion_rate_mm_s = 150.0;
  double grip_rate = 3.0;              // rad/s

  void validate() const;
};

/// Timestamped point estimate produced by the tracker.
struct TrackedPoint {
  Point3 p_ws;
  double t = 0.0;
};

/**
 * @brief Task-space error: where the tool should be minus where it is.
 *
 * `offset_ws` is the follow standoff (zero during approach). Throws
 * StaleEstimate when the measurement is older than two tracker periods.
 */
Eigen::Vector3d compute_error(const TrackedPoint& measured, double now, double tracker_period,
                              const Point3& tool_tip_ws,
                              const Eigen::Vector3d& offset_ws = Eigen::Vector3d::Zero());

struct GraspPlan {
  Point3 p_pl;                 ///< grasp point, /rc
  Point3 grasp_point_ws;       ///< same point in /ws
  JointVector positioning;     ///< analytic theta1, theta2, d3 (wrist zero)
  JointVector full;            ///< positioning + wrist alignment angles
  Eigen::Matrix3d target_rotation_rc = Eigen::Matrix3d::Identity();
  Eigen::Vector3d approach_dir_ws = -Eigen::Vector3d::UnitZ();
  double grip_open = 45.0 * M_PI / 180.0;
  double approach_standoff_mm = 25.0;
};

/**
 * @brief Builds the grasp plan from the three reconstructed markers (/ws).
 *
 * The grasp point is the middle marker projected onto the fitted needle
 * plane; positioning joints come from the preferred analytic branch; the
 * wrist is solved by orientation-only damped least squares so the jaw pivot
 * axis (tip-frame x) aligns with the needle tangent (tail -> tip) and the jaw
 * opening plane contains the plane normal, approached from the standoff side.
 * Throws CollinearPoints, NoFeasibleSolution, OutOfWorkspace.
 */
GraspPlan plan_grasp(const std::array<Point3, 3>& markers_ws, const KinematicChain& chain,
                     const RigidTransform& rc_from_ws, const ServoConfig& cfg);

/// Calibration actually used by the controller (estimates, not ground truth).
struct CalibratedFrames {
  RigidTransform rc_from_ws;
  RigidTransform ee_from_ws;
};

struct PhaseTransition {
  double t = 0.0;
  Phase to = Phase::Home;
};

struct ServoState {
  Phase phase = Phase::Home;
  JointVector joints;      ///< actual joints after actuation lag
  JointVector command;     ///< last commanded joints
  std::optional<GraspPlan> plan;
  std::vector<PhaseTransition> transitions;
  std::string abort_reason;

  // introspection for traces / tests
  Eigen::Vector3d last_error_ws = Eigen::Vector3d::Zero();
  Point3 tip_ws_estimate = Point3::Zero();
  std::optional<TrackedPoint> middle_estimate;
  Eigen::Matrix3d follow_rotation_rc = Eigen::Matrix3d::Identity();
  bool grip_closed_event = false;  ///< set on the step the grip finishes closing
  double closure_time = 0.0;
};

/**
 * @brief Position-based visual servo + grasp sequencer for one manipulator.
 *
 * Consumes marker detections, maintains the needle estimate through the
 * calibrated transforms, and walks Home -> Follow -> Approach -> Grasp ->
 * Return -> Done. Aborts when the estimate stays stale beyond the timeout in
 * an estimate-driven phase (Home, Follow, Approach) or the plan is
 * infeasible. Joints track commands through a first-order lag with rate
 * saturation. Deterministic.
 */
class ServoController {
 public:
  ServoController(KinematicChain chain, camera::StereoRig rig_estimate,
                  CalibratedFrames frames, perception::RateConfig rates, ServoConfig cfg);

  /// Advances one control step of length dt ending at time t.
  void step(ServoState& state, std::span<const MarkerDetection> detections, double t, double dt);

  /// Initial state: joints parked at home, grip open.
  ServoState make_initial_state() const;

  JointVector home_joints() const;
  const ServoConfig& config() const { return cfg_; }

  /// Tool tip in /ws as the controller believes it (through the calibrated rc_from_ws).
  Point3 tip_ws(const JointVector& joints) const;

 private:
  void ingest_detections(ServoState& state, std::span<const MarkerDetection> detections);
  bool estimate_stale(const ServoState& state, double t) const;
  void transition(ServoState& state, Phase to, double t);
  void abort(ServoState& state, double t, const std::string& reason);
  void track_command(ServoState& state, double dt) const;
  void command_pose(ServoState& state, const Point3& target_ws,
                    const Eigen::Matrix3d& target_rotation_rc);

  KinematicChain chain_;
  camera::StereoRig rig_;
  CalibratedFrames frames_;
  RigidTransform ws_from_rc_;
  perception::RateConfig rates_;
  ServoConfig cfg_;

  std::deque<TrackedPoint> settle_window_;
  std::array<std::optional<TrackedPoint>, 3> marker_estimates_;
  std::array<std::deque<TrackedPoint>, 3> marker_windows_;
  int approach_leg_ = 0;
};

}  // namespace ngrasp::servo
