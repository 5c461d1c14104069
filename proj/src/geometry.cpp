#include "ngrasp/geometry.hpp"

#include <cmath>

namespace ngrasp::geometry {

RigidTransform RigidTransform::from_axis_angle(const Eigen::Vector3d& axis, double angle) {
  RigidTransform t;
  t.rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  return t;
}

RigidTransform RigidTransform::from_rpy(double roll, double pitch, double yaw,
                                        const Eigen::Vector3d& translation) {
  RigidTransform t;
  t.rotation = (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
                   .toRotationMatrix();
  t.translation = translation;
  return t;
}

RigidTransform RigidTransform::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                                       const Eigen::Vector3d& up_hint) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d x = up_hint.cross(z);
  if (x.norm() < 1e-12) {
    throw DegenerateConfiguration("look_at: up hint parallel to viewing direction");
  }
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  // World-from-camera axes as columns; we return camera-from-world.
  Eigen::Matrix3d r_wc;
  r_wc.col(0) = x;
  r_wc.col(1) = y;
  r_wc.col(2) = z;
  RigidTransform t;
  t.rotation = r_wc.transpose();
  t.translation = -t.rotation * eye;
  return t;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

bool RigidTransform::is_rigid(double tol) const {
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  const double ortho = (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

Point3 apply(const RigidTransform& t, const Point3& p) { return t.rotation * p + t.translation; }

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

RigidTransform invert(const RigidTransform& t) {
  RigidTransform out;
  out.rotation = t.rotation.transpose();
  out.translation = -(out.rotation * t.translation);
  return out;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

namespace {

// Lexicographic comparison used by the plane sign convention.
bool lex_greater(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  for (int i = 0; i < 3; ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

// Orthonormal in-plane basis for a unit normal.
void plane_basis(const Eigen::Vector3d& n, Eigen::Vector3d& e1, Eigen::Vector3d& e2) {
  const Eigen::Vector3d seed =
      std::abs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  e1 = n.cross(seed).normalized();
  e2 = n.cross(e1);
}

// Singular values of the centered point matrix, descending.
Eigen::Vector3d centered_singular_values(std::span<const Point3> points, Point3* centroid_out,
                                         Eigen::Matrix3d* v_out) {
  Point3 centroid = Point3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Eigen::MatrixXd m(points.size(), 3);
  for (size_t i = 0; i < points.size(); ++i) m.row(i) = (points[i] - centroid).transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  if (centroid_out) *centroid_out = centroid;
  if (v_out) *v_out = svd.matrixV();
  Eigen::Vector3d sv = Eigen::Vector3d::Zero();
  for (int i = 0; i < svd.singularValues().size() && i < 3; ++i) sv[i] = svd.singularValues()[i];
  return sv;
}

}  // namespace

Plane make_plane(const Eigen::Vector3d& normal, double d) {
  const double norm = normal.norm();
  if (norm < 1e-15) throw DegenerateConfiguration("make_plane: zero normal");
  Plane plane;
  plane.normal = normal / norm;
  plane.d = d / norm;
  if (plane.d < 0.0 || (plane.d == 0.0 && lex_greater(-plane.normal, plane.normal))) {
    plane.normal = -plane.normal;
    plane.d = -plane.d;
  }
  return plane;
}

Point3 Circle3::point_at(double phi) const {
  Eigen::Vector3d e1, e2;
  plane_basis(plane.normal, e1, e2);
  return center + radius * (std::cos(phi) * e1 + std::sin(phi) * e2);
}

double Circle3::distance_to(const Point3& p) const {
  const Eigen::Vector3d rel = p - center;
  const double h = plane.normal.dot(rel);               // out-of-plane component
  const double rho = (rel - h * plane.normal).norm();   // in-plane radial distance
  const double dr = rho - radius;
  return std::sqrt(dr * dr + h * h);
}

Point3 Circle3::tangent_at(const Point3& p) const {
  const Eigen::Vector3d rel = p - center;
  const Eigen::Vector3d radial = rel - plane.normal.dot(rel) * plane.normal;
  if (radial.norm() < 1e-12) {
    throw DegenerateConfiguration("tangent_at: point projects onto the circle center");
  }
  return plane.normal.cross(radial.normalized());
}

Plane fit_plane(std::span<const Point3> points) {
  if (points.size() < 3) throw std::invalid_argument("fit_plane: need at least 3 points");
  Point3 centroid;
  Eigen::Matrix3d v;
  const Eigen::Vector3d sv = centered_singular_values(points, &centroid, &v);
  if (sv[0] <= 0.0 || sv[1] / sv[0] < kCollinearRatio) {
    throw CollinearPoints("fit_plane: centered points are rank deficient");
  }
  const Eigen::Vector3d normal = v.col(2);  // smallest principal axis
  return make_plane(normal, -normal.dot(centroid));
}

double point_plane_distance(const Plane& plane, const Point3& p) {
  return std::abs(plane.signed_distance(p)) / plane.normal.norm();
}

double mean_scan_distance(std::span<const Point3> points) {
  const Plane plane = fit_plane(points);
  double sum = 0.0;
  for (const auto& p : points) sum += point_plane_distance(plane, p);
  return sum / static_cast<double>(points.size());
}

RigidTransform absolute_orientation(std::span<const Point3> src, std::span<const Point3> dst) {
  if (src.size() != dst.size()) {
    throw std::invalid_argument("absolute_orientation: size mismatch");
  }
  if (src.size() < 3) throw std::invalid_argument("absolute_orientation: need at least 3 pairs");

  Point3 cs = Point3::Zero(), cd = Point3::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= static_cast<double>(src.size());
  cd /= static_cast<double>(dst.size());

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    h += (src[i] - cs) * (dst[i] - cd).transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv[0] <= 0.0 || sv[1] / sv[0] < kCollinearRatio) {
    throw DegenerateConfiguration("absolute_orientation: correspondences are rank deficient");
  }

  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;

  RigidTransform t;
  t.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  t.translation = cd - t.rotation * cs;
  return t;
}

double registration_rms(const RigidTransform& t, std::span<const Point3> src,
                        std::span<const Point3> dst) {
  if (src.size() != dst.size() || src.empty()) {
    throw std::invalid_argument("registration_rms: bad correspondence set");
  }
  double sum_sq = 0.0;
  for (size_t i = 0; i < src.size(); ++i) {
    sum_sq += (dst[i] - apply(t, src[i])).squaredNorm();
  }
  return std::sqrt(sum_sq / static_cast<double>(src.size()));
}

Circle3 circle_through_points(const Point3& a, const Point3& b, const Point3& c) {
  const std::vector<Point3> pts = {a, b, c};
  const Eigen::Vector3d sv = centered_singular_values(pts, nullptr, nullptr);
  if (sv[0] <= 0.0 || sv[1] / sv[0] < kCollinearRatio) {
    throw CollinearPoints("circle_through_points: points are collinear");
  }

  const Eigen::Vector3d n = (b - a).cross(c - a).normalized();
  const Eigen::Vector3d e1 = (b - a).normalized();
  const Eigen::Vector3d e2 = n.cross(e1);

  // 2-D circumcenter with a at the origin.
  const double bx = (b - a).dot(e1);
  const double cx = (c - a).dot(e1);
  const double cy = (c - a).dot(e2);
  const double ux = bx / 2.0;
  const double uy = (cx * cx + cy * cy - cx * bx) / (2.0 * cy);

  Circle3 circle;
  circle.center = a + ux * e1 + uy * e2;
  circle.radius = std::sqrt(ux * ux + uy * uy);
  circle.plane = make_plane(n, -n.dot(a));
  return circle;
}

}  // namespace ngrasp::geometry
