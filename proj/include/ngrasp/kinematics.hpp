#pragma once

#include <array>
#include <optional>
#include <vector>

#include "ngrasp/geometry.hpp"

namespace ngrasp::kinematics {

using geometry::Point3;
using geometry::RigidTransform;

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

/**
 * @brief Joint coordinates of the remote-center manipulator.
 *
 * theta1: yaw about the remote center (rad)
 * theta2: pitch about the remote center (rad)
 * d3:     insertion depth along the shaft (mm), >= 0 on the preferred branch
 * theta4..theta6: ZYX wrist angles (rad)
 * grip:   jaw opening half-angle (rad), >= 0
 */
struct JointVector {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double d3 = 0.0;
  double theta4 = 0.0;
  double theta5 = 0.0;
  double theta6 = 0.0;
  double grip = 0.0;

  /// The six pose-determining joints as a dense vector (grip excluded).
  Vector6 pose_joints() const;
  static JointVector from_pose_joints(const Vector6& q, double grip = 0.0);
};

struct JointLimits {
  double theta1_min = -80.0 * M_PI / 180.0, theta1_max = 80.0 * M_PI / 180.0;
  double theta2_min = -80.0 * M_PI / 180.0, theta2_max = 80.0 * M_PI / 180.0;
  double d3_min = 0.0, d3_max = 240.0;
  double theta4_min = -170.0 * M_PI / 180.0, theta4_max = 170.0 * M_PI / 180.0;
  double theta5_min = -80.0 * M_PI / 180.0, theta5_max = 80.0 * M_PI / 180.0;
  double theta6_min = -80.0 * M_PI / 180.0, theta6_max = 80.0 * M_PI / 180.0;
  double grip_min = 0.0, grip_max = 60.0 * M_PI / 180.0;

  void validate() const;
  bool contains(const JointVector& q) const;
  /// First three joints only, for analytic-solution screening.
  bool contains_positioning(const JointVector& q) const;
  JointVector clamp(const JointVector& q) const;
};

/**
 * @brief Geometry of the manipulator around its remote center of motion.
 *
 * The shaft pivots about the /rc origin; the insertion direction is
 * u(theta1, theta2) = Ry(theta1) * Rx(theta2) * (0, 0, -1), so the point
 * d3 * u is invariant under theta1/theta2 when d3 = 0. The jaw grasp point
 * (the "tip" everywhere in this library) sits at d3 * u; the wrist orients
 * the jaw about it and the distal jaw end extends a further
 * wrist_length + jaw_length along the jaw frame's -z.
 */
struct KinematicChain {
  RigidTransform rc_from_ws;
  double wrist_length = 9.0;  // mm
  double jaw_length = 10.0;   // mm
  JointLimits limits;

  void validate() const;
};

/// Damped least-squares solver settings. Normalization: d3 and position error
/// are divided by scale_mm so lambda and step_clamp act on dimensionless
/// quantities; tolerances are checked on unnormalized residuals.
struct DlsSettings {
  double lambda = 0.05;
  double tol_mm = 0.01;
  double tol_rot_rad = 1e-4;
  int max_iter = 200;
  double step_clamp = 0.1;
  double scale_mm = 100.0;
};

/// Insertion direction u(theta1, theta2), unit vector in /rc.
Eigen::Vector3d insertion_direction(double theta1, double theta2);

struct ForwardKinematics {
  Point3 tip;           ///< jaw grasp point d3 * u, /rc (mm)
  RigidTransform pose;  ///< distal jaw frame: full wrist rotation, distal jaw end as origin
};

/// Forward kinematics; throws JointLimitViolation outside chain.limits.
ForwardKinematics forward(const KinematicChain& chain, const JointVector& q);

/**
 * @brief 6x6 Jacobian of (tip position; jaw angular velocity) w.r.t. the pose joints.
 *
 * Rows 0..2: mm per rad (theta columns) and mm per mm (d3 column = u).
 * Rows 3..5: jaw frame angular velocity, rad per rad. The wrist columns have
 * zero linear part because the grasp point rides on the insertion axis.
 */
Matrix6 jacobian(const KinematicChain& chain, const JointVector& q);

/// One damped least-squares step dq = J^T (J J^T + lambda^2 I)^-1 e.
Vector6 dls_step(const Matrix6& j, const Vector6& e, double lambda);

struct IkResult {
  JointVector joints;
  int iterations = 0;          ///< DLS steps taken
  double pos_residual_mm = 0.0;
  double rot_residual_rad = 0.0;
  bool converged = false;
  std::vector<double> residual_history;  ///< combined normalized residual per step
};

/// Exception carrying the best iterate when the iteration stalls.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& msg, IkResult best) : Error(msg), best_(std::move(best)) {}
  const IkResult& best() const { return best_; }

 private:
  IkResult best_;
};

/**
 * @brief Iterative 6-DOF inverse kinematics (position + orientation).
 *
 * Damped least-squares steps with normalized joints and error, step-norm
 * clamp, and projection onto the joint limits each iteration. Returns once
 * the position residual is below tol_mm and the orientation residual below
 * tol_rot_rad; throws NoConvergence (carrying the best iterate) after
 * max_iter.
 */
IkResult ik_iterative(const KinematicChain& chain, const RigidTransform& target,
                      const JointVector& seed, const DlsSettings& settings = {});

/// Wrist-only variant: theta1..d3 stay fixed, only the angular error is driven.
IkResult ik_wrist_orientation(const KinematicChain& chain, const Eigen::Matrix3d& target_rotation,
                              const JointVector& seed, const DlsSettings& settings = {});

struct AnalyticSolutions {
  JointVector a;  ///< elbow-alternative branch, d3 = -||p||
  JointVector b;  ///< preferred branch, d3 = +||p||, cos(theta2) >= 0
};

/**
 * @brief Closed-form positioning solutions placing the grasp point at p (/rc).
 *
 * Solution B: d3 = ||p||, theta2 = asin(y / ||p||), theta1 = atan2(-x, -z).
 * Solution A: same theta1, theta2 shifted by pi (wrapped), d3 = -||p||.
 * Wrist and grip entries are zero. Throws SingularDirection when
 * x^2 + z^2 < 1e-12 (theta1 undefined) and OutOfWorkspace when limits are
 * supplied and ||p|| lies outside the insertion range.
 */
AnalyticSolutions ik_analytic_position(const Point3& p, const JointLimits* limits = nullptr);

/// Picks solution B when its positioning joints satisfy the limits, otherwise
/// solution A; throws NoFeasibleSolution when neither fits.
JointVector select_solution(const AnalyticSolutions& solutions, const JointLimits& limits);

}  // namespace ngrasp::kinematics
