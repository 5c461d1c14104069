#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "ngrasp/errors.hpp"

namespace ngrasp::geometry {

/// 3-D point or vector, millimetres unless stated otherwise.
using Point3 = Eigen::Vector3d;

/**
 * @brief Proper rigid transform (rotation + translation), maps points between frames.
 *
 * Applying T to a point p yields rotation * p + translation. Compositions read
 * right-to-left: compose(a_from_b, b_from_c) maps /c coordinates into /a.
 */
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  /// Rotation about a unit axis by angle (radians), no translation.
  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis, double angle);

  /// R = Rz(yaw) * Ry(pitch) * Rx(roll), angles in radians.
  static RigidTransform from_rpy(double roll, double pitch, double yaw,
                                 const Eigen::Vector3d& translation = Eigen::Vector3d::Zero());

  /// Camera-style look-at: +z points from eye toward target, x is image-right.
  static RigidTransform look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                                const Eigen::Vector3d& up_hint);

  Eigen::Matrix4d matrix() const;

  /// True when rotation^T rotation = I and det = +1 within tol.
  bool is_rigid(double tol = 1e-9) const;
};

Point3 apply(const RigidTransform& t, const Point3& p);
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);

/// Nearest rotation matrix in Frobenius norm (SVD projection, det forced to +1).
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

/// Rotation angle (radians) between two rotations, in [0, pi].
double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

/**
 * @brief Plane n.p + d = 0 with unit normal.
 *
 * Sign convention: d >= 0; when d == 0 the lexicographically larger of {n, -n}
 * is stored, so any plane has exactly one representation.
 */
struct Plane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double d = 0.0;

  double signed_distance(const Point3& p) const { return normal.dot(p) + d; }
};

/// Normalizes and applies the sign convention; throws DegenerateConfiguration on a zero normal.
Plane make_plane(const Eigen::Vector3d& normal, double d);

/// Circle embedded in 3-D: center on the carrier plane, radius > 0.
struct Circle3 {
  Point3 center = Point3::Zero();
  double radius = 0.0;
  Plane plane;

  /// Point on the circle at angle phi (radians) measured in the carrier plane basis.
  Point3 point_at(double phi) const;

  /// Distance from an arbitrary point to the circle curve.
  double distance_to(const Point3& p) const;

  /// Unit tangent of the circle at the projection of p onto the curve,
  /// oriented so that (normal x radial) convention holds.
  Point3 tangent_at(const Point3& p) const;
};

/// Scale-free rank test threshold shared by the fitting routines.
inline constexpr double kCollinearRatio = 1e-9;

/**
 * @brief Total-least-squares plane through >= 3 points.
 *
 * Normal is the smallest principal axis of the centered scatter; the plane
 * passes through the centroid. Throws CollinearPoints when the second
 * singular value of the centered point matrix is below kCollinearRatio times
 * the first (rank < 2, includes coincident points).
 */
Plane fit_plane(std::span<const Point3> points);

/// Orthogonal distance |n.p + d| / ||n||.
double point_plane_distance(const Plane& plane, const Point3& p);

/// Mean orthogonal distance of a scan to its own TLS plane fit.
double mean_scan_distance(std::span<const Point3> points);

/**
 * @brief Least-squares rigid transform T with dst_i ~ T(src_i).
 *
 * Closed form via SVD of the 3x3 cross-covariance (det-corrected), minimizing
 * sum ||dst_i - R src_i - t||^2. Coplanar sets are fine; throws
 * DegenerateConfiguration when the cross-covariance rank drops below 2
 * (collinear or coincident correspondences) and std::invalid_argument on
 * size mismatch or fewer than 3 pairs.
 */
RigidTransform absolute_orientation(std::span<const Point3> src, std::span<const Point3> dst);

/// Root-mean-square residual of a correspondence set under a transform.
double registration_rms(const RigidTransform& t, std::span<const Point3> src,
                        std::span<const Point3> dst);

/// Unique circle through 3 non-collinear points; throws CollinearPoints otherwise.
Circle3 circle_through_points(const Point3& a, const Point3& b, const Point3& c);

}  // namespace ngrasp::geometry
