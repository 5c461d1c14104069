#include "ngrasp/kinematics.hpp"

#include <cmath>

namespace ngrasp::kinematics {

namespace {

Eigen::Matrix3d rot_x(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix();
}
Eigen::Matrix3d rot_y(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix();
}
Eigen::Matrix3d rot_z(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

double wrap_pi(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

// Axis-angle vector of R (matrix logarithm), magnitude in [0, pi].
Eigen::Vector3d rotation_log(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

struct Frames {
  Eigen::Matrix3d pre;   // Ry(theta1) * Rx(theta2)
  Eigen::Matrix3d tip;   // pre * Rz(theta4) * Ry(theta5) * Rx(theta6)
  Eigen::Vector3d u;     // insertion direction
};

Frames frames_of(const JointVector& q) {
  Frames f;
  f.pre = rot_y(q.theta1) * rot_x(q.theta2);
  f.tip = f.pre * rot_z(q.theta4) * rot_y(q.theta5) * rot_x(q.theta6);
  f.u = f.pre * Eigen::Vector3d(0.0, 0.0, -1.0);
  return f;
}

}  // namespace

Vector6 JointVector::pose_joints() const {
  Vector6 v;
  v << theta1, theta2, d3, theta4, theta5, theta6;
  return v;
}

JointVector JointVector::from_pose_joints(const Vector6& q, double grip) {
  return {q[0], q[1], q[2], q[3], q[4], q[5], grip};
}

void JointLimits::validate() const {
  const std::array<std::pair<double, double>, 7> ranges = {{{theta1_min, theta1_max},
                                                            {theta2_min, theta2_max},
                                                            {d3_min, d3_max},
                                                            {theta4_min, theta4_max},
                                                            {theta5_min, theta5_max},
                                                            {theta6_min, theta6_max},
                                                            {grip_min, grip_max}}};
  for (const auto& [lo, hi] : ranges) {
    if (!(lo < hi)) throw ConfigError("joint limits: each lower bound must be below its upper");
  }
}

bool JointLimits::contains_positioning(const JointVector& q) const {
  return q.theta1 >= theta1_min && q.theta1 <= theta1_max && q.theta2 >= theta2_min &&
         q.theta2 <= theta2_max && q.d3 >= d3_min && q.d3 <= d3_max;
}

bool JointLimits::contains(const JointVector& q) const {
  return contains_positioning(q) && q.theta4 >= theta4_min && q.theta4 <= theta4_max &&
         q.theta5 >= theta5_min && q.theta5 <= theta5_max && q.theta6 >= theta6_min &&
         q.theta6 <= theta6_max && q.grip >= grip_min && q.grip <= grip_max;
}

JointVector JointLimits::clamp(const JointVector& q) const {
  JointVector out = q;
  out.theta1 = std::clamp(q.theta1, theta1_min, theta1_max);
  out.theta2 = std::clamp(q.theta2, theta2_min, theta2_max);
  out.d3 = std::clamp(q.d3, d3_min, d3_max);
  out.theta4 = std::clamp(q.theta4, theta4_min, theta4_max);
  out.theta5 = std::clamp(q.theta5, theta5_min, theta5_max);
  out.theta6 = std::clamp(q.theta6, theta6_min, theta6_max);
  out.grip = std::clamp(q.grip, grip_min, grip_max);
  return out;
}

void KinematicChain::validate() const {
  if (wrist_length <= 0.0 || jaw_length <= 0.0) {
    throw ConfigError("kinematic chain: lengths must be positive");
  }
  if (!rc_from_ws.is_rigid(1e-9)) throw ConfigError("kinematic chain: rc_from_ws must be rigid");
  limits.validate();
}

Eigen::Vector3d insertion_direction(double theta1, double theta2) {
  const double s1 = std::sin(theta1), c1 = std::cos(theta1);
  const double s2 = std::sin(theta2), c2 = std::cos(theta2);
  return {-s1 * c2, s2, -c1 * c2};
}

ForwardKinematics forward(const KinematicChain& chain, const JointVector& q) {
  if (!chain.limits.contains(q)) {
    throw JointLimitViolation("forward: joint vector outside limits");
  }
  const Frames f = frames_of(q);
  ForwardKinematics fk;
  fk.tip = q.d3 * f.u;
  fk.pose.rotation = f.tip;
  fk.pose.translation =
      fk.tip + f.tip * Eigen::Vector3d(0.0, 0.0, -(chain.wrist_length + chain.jaw_length));
  return fk;
}

Matrix6 jacobian(const KinematicChain& chain, const JointVector& q) {
  if (!chain.limits.contains(q)) {
    throw JointLimitViolation("jacobian: joint vector outside limits");
  }
  const Frames f = frames_of(q);

  // Instantaneous rotation axes of each revolute joint, in /rc.
  const Eigen::Vector3d ax1 = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d ax2 = rot_y(q.theta1) * Eigen::Vector3d::UnitX();
  const Eigen::Vector3d ax4 = f.pre * Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d ax5 = f.pre * rot_z(q.theta4) * Eigen::Vector3d::UnitY();
  const Eigen::Vector3d ax6 = f.pre * rot_z(q.theta4) * rot_y(q.theta5) * Eigen::Vector3d::UnitX();

  const Eigen::Vector3d p = q.d3 * f.u;

  Matrix6 j = Matrix6::Zero();
  j.block<3, 1>(0, 0) = ax1.cross(p);
  j.block<3, 1>(0, 1) = ax2.cross(p);
  j.block<3, 1>(0, 2) = f.u;
  // Wrist columns move nothing linearly: the grasp point rides on the shaft axis.
  j.block<3, 1>(3, 0) = ax1;
  j.block<3, 1>(3, 1) = ax2;
  j.block<3, 1>(3, 3) = ax4;
  j.block<3, 1>(3, 4) = ax5;
  j.block<3, 1>(3, 5) = ax6;
  return j;
}

Vector6 dls_step(const Matrix6& j, const Vector6& e, double lambda) {
  Matrix6 a = j * j.transpose();
  a.diagonal().array() += lambda * lambda;
  const Eigen::LDLT<Matrix6> solver(a);
  if (solver.info() != Eigen::Success) {
    // Unreachable for lambda > 0: J J^T + lambda^2 I is positive definite.
    throw Error("dls_step: factorization failed");
  }
  return j.transpose() * solver.solve(e);
}

namespace {

struct TaskError {
  Vector6 e;                  // [position mm; orientation rad]
  double pos_norm = 0.0;      // mm
  double rot_norm = 0.0;      // rad
};

TaskError task_error(const ForwardKinematics& fk, const RigidTransform& target) {
  TaskError te;
  te.e.head<3>() = target.translation - fk.tip;
  te.e.tail<3>() = rotation_log(target.rotation * fk.pose.rotation.transpose());
  te.pos_norm = te.e.head<3>().norm();
  te.rot_norm = te.e.tail<3>().norm();
  return te;
}

// Shared DLS loop; `position_rows` disables the linear error block for the
// wrist-only solve.
IkResult run_dls(const KinematicChain& chain, const RigidTransform& target,
                 const JointVector& seed, const DlsSettings& settings, bool position_rows,
                 bool wrist_only) {
  JointVector q = chain.limits.clamp(seed);

  // Normalization: d3 and the position error share scale_mm.
  Vector6 joint_scale = Vector6::Ones();
  joint_scale[2] = settings.scale_mm;
  Vector6 task_scale = Vector6::Ones();
  task_scale.head<3>() = Eigen::Vector3d::Constant(1.0 / settings.scale_mm);

  IkResult result;
  result.residual_history.reserve(static_cast<size_t>(settings.max_iter));
  double best_norm = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter <= settings.max_iter; ++iter) {
    const ForwardKinematics fk = forward(chain, q);
    TaskError te = task_error(fk, target);
    if (!position_rows) {
      te.e.head<3>().setZero();
      te.pos_norm = 0.0;
    }

    const double norm = (task_scale.asDiagonal() * te.e).norm();
    if (norm < best_norm) {
      best_norm = norm;
      result.joints = q;
      result.pos_residual_mm = te.pos_norm;
      result.rot_residual_rad = te.rot_norm;
    }
    if (te.pos_norm < settings.tol_mm && te.rot_norm < settings.tol_rot_rad) {
      result.joints = q;
      result.pos_residual_mm = te.pos_norm;
      result.rot_residual_rad = te.rot_norm;
      result.converged = true;
      return result;
    }
    if (iter == settings.max_iter) break;

    Matrix6 j_scaled =
        task_scale.asDiagonal() * jacobian(chain, q) * joint_scale.asDiagonal();
    if (wrist_only) {
      j_scaled.leftCols<3>().setZero();
    }
    Vector6 dq = dls_step(j_scaled, task_scale.asDiagonal() * te.e, settings.lambda);
    const double step_norm = dq.norm();
    if (step_norm > settings.step_clamp) dq *= settings.step_clamp / step_norm;

    const Vector6 q_new = q.pose_joints() + joint_scale.asDiagonal() * dq;
    q = chain.limits.clamp(JointVector::from_pose_joints(q_new, q.grip));
    ++result.iterations;
    result.residual_history.push_back(norm);
  }

  throw NoConvergence("inverse kinematics did not converge", result);
}

}  // namespace

IkResult ik_iterative(const KinematicChain& chain, const RigidTransform& target,
                      const JointVector& seed, const DlsSettings& settings) {
  return run_dls(chain, target, seed, settings, /*position_rows=*/true, /*wrist_only=*/false);
}

IkResult ik_wrist_orientation(const KinematicChain& chain, const Eigen::Matrix3d& target_rotation,
                              const JointVector& seed, const DlsSettings& settings) {
  RigidTransform target;
  target.rotation = target_rotation;
  return run_dls(chain, target, seed, settings, /*position_rows=*/false, /*wrist_only=*/true);
}

AnalyticSolutions ik_analytic_position(const Point3& p, const JointLimits* limits) {
  const double r = p.norm();
  if (p.x() * p.x() + p.z() * p.z() < 1e-12) {
    throw SingularDirection("ik_analytic_position: theta1 undefined for x = z = 0");
  }
  if (limits && (r < limits->d3_min || r > limits->d3_max)) {
    throw OutOfWorkspace("ik_analytic_position: ||p|| outside the insertion range");
  }

  const double theta1 = std::atan2(-p.x(), -p.z());
  const double theta2_b = std::asin(std::clamp(p.y() / r, -1.0, 1.0));

  AnalyticSolutions sol;
  sol.b.theta1 = theta1;
  sol.b.theta2 = theta2_b;
  sol.b.d3 = r;
  sol.a.theta1 = theta1;
  sol.a.theta2 = wrap_pi(theta2_b + M_PI);
  sol.a.d3 = -r;
  return sol;
}

JointVector select_solution(const AnalyticSolutions& solutions, const JointLimits& limits) {
  if (limits.contains_positioning(solutions.b)) return solutions.b;
  if (limits.contains_positioning(solutions.a)) return solutions.a;
  throw NoFeasibleSolution("select_solution: neither positioning branch satisfies the limits");
}

}  // namespace ngrasp::kinematics
