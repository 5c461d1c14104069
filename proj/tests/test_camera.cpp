#include "ngrasp/camera.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ngrasp/config.hpp"

namespace ngrasp::camera {
namespace {

using geometry::RigidTransform;

StereoRig default_rig() { return harness::RigConfig{}.build(); }

TEST(Intrinsics, ValidateRejectsBadValues) {
  CameraIntrinsics k;
  EXPECT_NO_THROW(k.validate());
  k.fx = -1.0;
  EXPECT_THROW(k.validate(), ConfigError);
  k = {};
  k.cx = 5000.0;  // principal point outside the image
  EXPECT_THROW(k.validate(), ConfigError);
  k = {};
  k.width = 0;
  EXPECT_THROW(k.validate(), ConfigError);
}

TEST(RigTest, DefaultRigIsConsistent) {
  StereoRig rig = default_rig();
  EXPECT_NO_THROW(rig.validate());
  EXPECT_NEAR(rig.baseline(), 4.3, 1e-12);
  // left optical frame is the end-effector frame
  EXPECT_LT((rig.camera_from_ws(Side::Left).matrix() - rig.ee_from_ws.matrix()).norm(), 1e-12);
  // right camera = right_from_left stacked on the left pose
  RigidTransform expected = geometry::compose(rig.right_from_left, rig.ee_from_ws);
  EXPECT_LT((rig.camera_from_ws(Side::Right).matrix() - expected.matrix()).norm(), 1e-12);
}

TEST(Projection, CameraFrameHandValues) {
  CameraIntrinsics k;
  k.fx = 1000.0;
  k.fy = 1000.0;
  k.cx = 500.0;
  k.cy = 500.0;
  k.width = 1000;
  k.height = 1000;
  // point on the optical axis lands on the principal point
  Pixel on_axis = project_camera_frame(k, {0.0, 0.0, 100.0});
  EXPECT_NEAR(on_axis.u, 500.0, 1e-12);
  EXPECT_NEAR(on_axis.v, 500.0, 1e-12);
  // u = fx * x / z + cx
  Pixel off = project_camera_frame(k, {10.0, 0.0, 100.0});
  EXPECT_NEAR(off.u, 600.0, 1e-12);
  EXPECT_NEAR(off.v, 500.0, 1e-12);
  // projection is scale invariant along the ray
  Pixel far = project_camera_frame(k, {20.0, 0.0, 200.0});
  EXPECT_NEAR(far.u, off.u, 1e-12);
}

TEST(Projection, ThrowsBehindCamera) {
  CameraIntrinsics k;
  EXPECT_THROW(project_camera_frame(k, {0.0, 0.0, 0.5}), BehindCamera);
  EXPECT_THROW(project_camera_frame(k, {0.0, 0.0, -50.0}), BehindCamera);

  StereoRig rig = default_rig();
  // a workspace point behind the endoscope: push it past the camera center
  // along the viewing direction, on the camera's back side
  Point3 eye = geometry::apply(geometry::invert(rig.ee_from_ws), Point3::Zero());
  Point3 behind = eye + (eye - Point3(0.0, 0.0, 0.0)).normalized() * 10.0;
  EXPECT_THROW(project(rig, Side::Left, behind), BehindCamera);
}

TEST(Triangulation, RoundTripsExactProjections) {
  StereoRig rig = default_rig();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> xy(-30.0, 30.0);
  std::uniform_real_distribution<double> z(0.0, 40.0);
  for (int i = 0; i < 200; ++i) {
    Point3 p_ws(xy(rng), xy(rng), z(rng));
    Pixel l = project(rig, Side::Left, p_ws);
    Pixel r = project(rig, Side::Right, p_ws);
    Point3 rec = triangulate(rig, l, r);
    EXPECT_LT((rec - p_ws).norm(), 1e-6) << "point " << i;
    EXPECT_LT(reprojection_error(rig, Side::Left, rec, l), 1e-6);
  }
}

TEST(Triangulation, RejectsPixelsOutsideGuardBand) {
  StereoRig rig = default_rig();
  // guard band extends the 720x576 image by 20% per side
  Pixel inside{-100.0, 288.0};   // within 0.2 * 720 = 144 px band
  Pixel outside{-200.0, 288.0};  // beyond it
  Pixel ok{360.0, 288.0};
  EXPECT_THROW(triangulate(rig, outside, ok), OutOfImageBounds);
  EXPECT_THROW(triangulate(rig, ok, outside), OutOfImageBounds);
  // the band itself is accepted (may still fail later for geometric reasons,
  // but not with OutOfImageBounds)
  try {
    triangulate(rig, inside, ok);
  } catch (const OutOfImageBounds&) {
    FAIL() << "pixel inside the guard band was rejected";
  } catch (const Error&) {
  }
}

TEST(Triangulation, RejectsNearParallelRays) {
  StereoRig rig = default_rig();
  // a point 50 m out subtends ~0.005 deg at a 4.3 mm baseline
  Point3 eye = geometry::apply(geometry::invert(rig.ee_from_ws), Point3::Zero());
  Point3 dir = (Point3::Zero() - eye).normalized();
  Point3 far_away = eye + dir * 50000.0;
  Pixel l = project(rig, Side::Left, far_away);
  Pixel r = project(rig, Side::Right, far_away);
  EXPECT_THROW(triangulate(rig, l, r), DegenerateRays);
}

// With a 4.3 mm baseline and ~140 mm standoff the reconstruction error from
// pixel noise concentrates along the viewing direction: depth error scales
// with Z^2/(f b), lateral error with Z/f, a factor of ~45 apart here.
TEST(Triangulation, NoiseErrorConcentratesAlongViewingAxis) {
  StereoRig rig = default_rig();
  const double sigma = 0.5;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, sigma);
  Eigen::Matrix3d r_cam_from_ws = rig.ee_from_ws.rotation;

  double sum_axial = 0.0, sum_lateral = 0.0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    std::uniform_real_distribution<double> xy(-20.0, 20.0);
    Point3 p_ws(xy(rng), xy(rng), 10.0);
    Pixel l = project(rig, Side::Left, p_ws);
    Pixel r = project(rig, Side::Right, p_ws);
    l.u += noise(rng);
    l.v += noise(rng);
    r.u += noise(rng);
    r.v += noise(rng);
    Point3 err_cam = r_cam_from_ws * (triangulate(rig, l, r) - p_ws);
    sum_axial += err_cam.z() * err_cam.z();
    sum_lateral += err_cam.head<2>().squaredNorm() / 2.0;
  }
  double rms_axial = std::sqrt(sum_axial / n);
  double rms_lateral = std::sqrt(sum_lateral / n);
  EXPECT_GT(rms_axial, 5.0 * rms_lateral);
  // sanity on the absolute scale: sigma_z ~ Z^2 sqrt(2) sigma / (f b)
  double z_cam = (geometry::apply(rig.ee_from_ws, Point3(0, 0, 10))).z();
  double predicted = z_cam * z_cam * std::sqrt(2.0) * sigma / (1000.0 * 4.3);
  EXPECT_NEAR(rms_axial, predicted, 0.35 * predicted);
}

TEST(ChessboardTest, CornersRowMajorLayout) {
  Chessboard board{5, 7, 10.0};
  auto corners = board.corners_ws();
  ASSERT_EQ(corners.size(), 35u);
  EXPECT_EQ(board.corner_count(), 35);
  EXPECT_LT((corners.front() - Point3(0.0, 0.0, 0.0)).norm(), 1e-12);
  // corner (r, c) at (c * s, r * s, 0), row-major: index = r * cols + c
  EXPECT_LT((corners[1] - Point3(10.0, 0.0, 0.0)).norm(), 1e-12);
  EXPECT_LT((corners[7] - Point3(0.0, 10.0, 0.0)).norm(), 1e-12);
  EXPECT_LT((corners.back() - Point3(60.0, 40.0, 0.0)).norm(), 1e-12);
  for (const auto& c : corners) EXPECT_EQ(c.z(), 0.0);
}

TEST(Extrinsics, RecoversPoseFromExactCorners) {
  StereoRig rig = default_rig();
  Chessboard board;
  std::vector<Pixel> px;
  for (const auto& c : board.corners_ws()) px.push_back(project(rig, Side::Left, c));

  ExtrinsicsEstimate est = estimate_extrinsics(board, px, rig.left);
  EXPECT_LT(est.reprojection_rms_px, 1e-9);
  EXPECT_LT((est.ee_from_ws.translation - rig.ee_from_ws.translation).norm(), 1e-8);
  EXPECT_LT(geometry::rotation_angle_between(est.ee_from_ws.rotation, rig.ee_from_ws.rotation),
            1e-9);
  ASSERT_TRUE(est.ee_from_ws.is_rigid(1e-9));
}

TEST(Extrinsics, ReprojectionRmsTracksInjectedNoise) {
  StereoRig rig = default_rig();
  Chessboard board;
  std::mt19937_64 rng(13);
  const double sigma = 1.0;
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<Pixel> px;
  for (const auto& c : board.corners_ws()) {
    Pixel p = project(rig, Side::Left, c);
    px.push_back({p.u + noise(rng), p.v + noise(rng)});
  }
  ExtrinsicsEstimate est = estimate_extrinsics(board, px, rig.left);
  // the fit absorbs a little of the noise; rms stays the same order
  EXPECT_GT(est.reprojection_rms_px, 0.3 * sigma);
  EXPECT_LT(est.reprojection_rms_px, 3.0 * sigma);
}

TEST(Extrinsics, InputValidation) {
  StereoRig rig = default_rig();
  Chessboard board;
  std::vector<Pixel> three(3, Pixel{100.0, 100.0});
  EXPECT_THROW(estimate_extrinsics(board, three, rig.left), InsufficientCorners);
  std::vector<Pixel> wrong_count(10, Pixel{100.0, 100.0});
  EXPECT_THROW(estimate_extrinsics(board, wrong_count, rig.left), std::invalid_argument);
  // all corners projected to the same pixel: hopelessly ill conditioned
  std::vector<Pixel> coincident(board.corner_count(), Pixel{100.0, 100.0});
  EXPECT_THROW(estimate_extrinsics(board, coincident, rig.left), Error);
}

TEST(Extrinsics, ReprojectionErrorHandValue) {
  StereoRig rig = default_rig();
  Point3 p(0.0, 0.0, 10.0);
  Pixel exact = project(rig, Side::Left, p);
  EXPECT_NEAR(reprojection_error(rig, Side::Left, p, exact), 0.0, 1e-12);
  Pixel shifted{exact.u + 3.0, exact.v - 4.0};
  EXPECT_NEAR(reprojection_error(rig, Side::Left, p, shifted), 5.0, 1e-12);
}

}  // namespace
}  // namespace ngrasp::camera
