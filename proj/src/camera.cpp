#include "ngrasp/camera.hpp"

#include <cmath>

namespace ngrasp::camera {

void CameraIntrinsics::validate() const {
  if (fx <= 0.0 || fy <= 0.0) throw ConfigError("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw ConfigError("intrinsics: image size must be positive");
  if (cx < 0.0 || cx > width || cy < 0.0 || cy > height) {
    throw ConfigError("intrinsics: principal point outside the image");
  }
}

RigidTransform StereoRig::camera_from_ws(Side side) const {
  if (side == Side::Left) return ee_from_ws;
  return geometry::compose(right_from_left, ee_from_ws);
}

const CameraIntrinsics& StereoRig::intrinsics(Side side) const {
  return side == Side::Left ? left : right;
}

void StereoRig::validate() const {
  left.validate();
  right.validate();
  if (baseline() <= 0.0) throw ConfigError("stereo rig: baseline must be positive");
  if (!right_from_left.is_rigid(1e-9) || !ee_from_ws.is_rigid(1e-9)) {
    throw ConfigError("stereo rig: transforms must be rigid");
  }
}

std::vector<Point3> Chessboard::corners_ws() const {
  std::vector<Point3> corners;
  corners.reserve(static_cast<size_t>(corner_count()));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      corners.emplace_back(c * square_size, r * square_size, 0.0);
    }
  }
  return corners;
}

Pixel project_camera_frame(const CameraIntrinsics& k, const Point3& p_cam) {
  if (p_cam.z() < kMinDepth) throw BehindCamera("project: point behind the camera");
  return {k.fx * p_cam.x() / p_cam.z() + k.cx, k.fy * p_cam.y() / p_cam.z() + k.cy};
}

Pixel project(const StereoRig& rig, Side side, const Point3& p_ws) {
  return project_camera_frame(rig.intrinsics(side),
                              geometry::apply(rig.camera_from_ws(side), p_ws));
}

namespace {

void check_guard_band(const CameraIntrinsics& k, const Pixel& px, const char* what) {
  const double gu = 0.2 * k.width;
  const double gv = 0.2 * k.height;
  if (px.u < -gu || px.u > k.width + gu || px.v < -gv || px.v > k.height + gv) {
    throw OutOfImageBounds(std::string(what) + ": pixel outside the image guard band");
  }
}

Eigen::Matrix<double, 3, 4> projection_matrix(const CameraIntrinsics& intr,
                                              const RigidTransform& cam_from_ws) {
  Eigen::Matrix3d k;
  k << intr.fx, 0.0, intr.cx, 0.0, intr.fy, intr.cy, 0.0, 0.0, 1.0;
  Eigen::Matrix<double, 3, 4> rt;
  rt.leftCols<3>() = cam_from_ws.rotation;
  rt.col(3) = cam_from_ws.translation;
  return k * rt;
}

// Unit ray through a pixel, expressed in /ws.
Eigen::Vector3d pixel_ray_ws(const CameraIntrinsics& intr, const RigidTransform& cam_from_ws,
                             const Pixel& px) {
  const Eigen::Vector3d dir_cam((px.u - intr.cx) / intr.fx, (px.v - intr.cy) / intr.fy, 1.0);
  return (cam_from_ws.rotation.transpose() * dir_cam).normalized();
}

}  // namespace

Point3 triangulate(const StereoRig& rig, const Pixel& left_px, const Pixel& right_px) {
  check_guard_band(rig.left, left_px, "triangulate(left)");
  check_guard_band(rig.right, right_px, "triangulate(right)");

  const RigidTransform left_from_ws = rig.camera_from_ws(Side::Left);
  const RigidTransform right_from_ws = rig.camera_from_ws(Side::Right);

  const Eigen::Vector3d ray_l = pixel_ray_ws(rig.left, left_from_ws, left_px);
  const Eigen::Vector3d ray_r = pixel_ray_ws(rig.right, right_from_ws, right_px);
  constexpr double kMinRayAngle = 0.01 * M_PI / 180.0;
  const double cos_angle = std::clamp(ray_l.dot(ray_r), -1.0, 1.0);
  if (std::acos(cos_angle) < kMinRayAngle) {
    throw DegenerateRays("triangulate: viewing rays nearly parallel");
  }

  const auto p_l = projection_matrix(rig.left, left_from_ws);
  const auto p_r = projection_matrix(rig.right, right_from_ws);

  Eigen::Matrix4d a;
  a.row(0) = left_px.u * p_l.row(2) - p_l.row(0);
  a.row(1) = left_px.v * p_l.row(2) - p_l.row(1);
  a.row(2) = right_px.u * p_r.row(2) - p_r.row(0);
  a.row(3) = right_px.v * p_r.row(2) - p_r.row(1);

  Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullV);
  const Eigen::Vector4d x = svd.matrixV().col(3);
  if (std::abs(x[3]) < 1e-12) throw DegenerateRays("triangulate: point at infinity");
  return x.head<3>() / x[3];
}

ExtrinsicsEstimate estimate_extrinsics(const Chessboard& board, std::span<const Pixel> corners_px,
                                       const CameraIntrinsics& k) {
  if (corners_px.size() < 4) {
    throw InsufficientCorners("estimate_extrinsics: need at least 4 corners");
  }
  const std::vector<Point3> corners_ws = board.corners_ws();
  if (corners_px.size() != corners_ws.size()) {
    throw std::invalid_argument("estimate_extrinsics: corner count does not match the board");
  }
  const size_t n = corners_px.size();

  // Hartley normalization of both point sets keeps the DLT well scaled.
  Eigen::Vector2d mean_b = Eigen::Vector2d::Zero(), mean_p = Eigen::Vector2d::Zero();
  for (size_t i = 0; i < n; ++i) {
    mean_b += Eigen::Vector2d(corners_ws[i].x(), corners_ws[i].y());
    mean_p += Eigen::Vector2d(corners_px[i].u, corners_px[i].v);
  }
  mean_b /= static_cast<double>(n);
  mean_p /= static_cast<double>(n);
  double scale_b = 0.0, scale_p = 0.0;
  for (size_t i = 0; i < n; ++i) {
    scale_b += (Eigen::Vector2d(corners_ws[i].x(), corners_ws[i].y()) - mean_b).norm();
    scale_p += (Eigen::Vector2d(corners_px[i].u, corners_px[i].v) - mean_p).norm();
  }
  if (scale_b <= 1e-12 || scale_p <= 1e-12) {
    throw IllConditioned("estimate_extrinsics: corner spread is degenerate");
  }
  scale_b = std::sqrt(2.0) * n / scale_b;
  scale_p = std::sqrt(2.0) * n / scale_p;

  Eigen::Matrix3d t_b = Eigen::Matrix3d::Identity(), t_p = Eigen::Matrix3d::Identity();
  t_b(0, 0) = t_b(1, 1) = scale_b;
  t_b.block<2, 1>(0, 2) = -scale_b * mean_b;
  t_p(0, 0) = t_p(1, 1) = scale_p;
  t_p.block<2, 1>(0, 2) = -scale_p * mean_p;

  Eigen::MatrixXd a(2 * n, 9);
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d b = t_b * Eigen::Vector3d(corners_ws[i].x(), corners_ws[i].y(), 1.0);
    const Eigen::Vector3d p = t_p * Eigen::Vector3d(corners_px[i].u, corners_px[i].v, 1.0);
    a.row(2 * i) << -b.x(), -b.y(), -1.0, 0.0, 0.0, 0.0, p.x() * b.x(), p.x() * b.y(), p.x();
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, -b.x(), -b.y(), -1.0, p.y() * b.x(), p.y() * b.y(), p.y();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // sigma8 is the smallest value an exact solution leaves nonzero.
  if (sv[7] <= 0.0 || sv[0] / sv[7] > 1e12) {
    throw IllConditioned("estimate_extrinsics: homography system is ill conditioned");
  }

  Eigen::Matrix3d h_norm;
  const Eigen::VectorXd hv = svd.matrixV().col(8);
  h_norm << hv[0], hv[1], hv[2], hv[3], hv[4], hv[5], hv[6], hv[7], hv[8];
  Eigen::Matrix3d h = t_p.inverse() * h_norm * t_b;

  Eigen::Matrix3d k_mat;
  k_mat << k.fx, 0.0, k.cx, 0.0, k.fy, k.cy, 0.0, 0.0, 1.0;
  Eigen::Matrix3d m = k_mat.inverse() * h;

  const double lambda = 2.0 / (m.col(0).norm() + m.col(1).norm());
  m *= lambda;
  if (m(2, 2) < 0.0) m = -m;  // board in front of the camera

  Eigen::Matrix3d r_cols;
  r_cols.col(0) = m.col(0);
  r_cols.col(1) = m.col(1);
  r_cols.col(2) = m.col(0).cross(m.col(1));

  ExtrinsicsEstimate est;
  est.ee_from_ws.rotation = geometry::nearest_rotation(r_cols);
  est.ee_from_ws.translation = m.col(2);

  double sum_sq = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Pixel reproj =
        project_camera_frame(k, geometry::apply(est.ee_from_ws, corners_ws[i]));
    const double du = reproj.u - corners_px[i].u;
    const double dv = reproj.v - corners_px[i].v;
    sum_sq += du * du + dv * dv;
  }
  est.reprojection_rms_px = std::sqrt(sum_sq / static_cast<double>(n));
  return est;
}

double reprojection_error(const StereoRig& rig, Side side, const Point3& p_ws,
                          const Pixel& observed) {
  const Pixel px = project(rig, side, p_ws);
  const double du = px.u - observed.u;
  const double dv = px.v - observed.v;
  return std::sqrt(du * du + dv * dv);
}

}  // namespace ngrasp::camera
