#include "ngrasp/calibration.hpp"

#include <cmath>

namespace ngrasp::harness {

namespace {

using geometry::Point3;
using geometry::RigidTransform;

Point3 gauss3(std::mt19937_64& rng, std::normal_distribution<double>& g, double sigma) {
  return {sigma * g(rng), sigma * g(rng), sigma * g(rng)};
}

PlaneScanResult scan_plane(const Eigen::Vector3d& origin, const Eigen::Vector3d& e1,
                           const Eigen::Vector3d& e2, int points, double half_extent,
                           double tip_sigma, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(-half_extent, half_extent);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Point3> scan;
  scan.reserve(static_cast<size_t>(points));
  for (int i = 0; i < points; ++i) {
    const Point3 p = origin + uniform(rng) * e1 + uniform(rng) * e2;
    scan.push_back(p + gauss3(rng, g, tip_sigma));
  }
  PlaneScanResult result;
  result.d_mean_mm = geometry::mean_scan_distance(scan);
  const geometry::Plane plane = geometry::fit_plane(scan);
  for (const auto& p : scan) {
    result.max_abs_mm = std::max(result.max_abs_mm, geometry::point_plane_distance(plane, p));
  }
  return result;
}

std::vector<Point3> registration_targets(const ScenarioConfig& cfg) {
  // N board corners double as the touched registration targets. Stride evenly
  // through the grid: consecutive corners would form a near-collinear strip
  // that leaves one rotation axis almost unconstrained.
  const std::vector<Point3> corners = cfg.calibration.board().corners_ws();
  const size_t n = std::min<size_t>(corners.size(),
                                    static_cast<size_t>(cfg.calibration.registration_points));
  std::vector<Point3> targets;
  targets.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const size_t idx = n > 1 ? i * (corners.size() - 1) / (n - 1) : 0;
    targets.push_back(corners[idx]);
  }
  return targets;
}

RegistrationResult run_registration(const ScenarioConfig& cfg, double tip_sigma,
                                    std::mt19937_64& rng) {
  const RigidTransform truth = cfg.chain.build().rc_from_ws;
  const std::vector<Point3> targets = registration_targets(cfg);

  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Point3> measured;
  measured.reserve(targets.size());
  for (const auto& p : targets) {
    measured.push_back(geometry::apply(truth, p) + gauss3(rng, g, tip_sigma));
  }

  RegistrationResult result;
  result.estimate = geometry::absolute_orientation(targets, measured);
  result.translation_error_mm = (result.estimate.translation - truth.translation).norm();
  result.rotation_error_rad =
      geometry::rotation_angle_between(result.estimate.rotation, truth.rotation);
  result.rms_residual_mm = geometry::registration_rms(result.estimate, targets, measured);

  const RigidTransform ws_from_rc = geometry::invert(result.estimate);
  double sum = 0.0;
  for (size_t i = 0; i < targets.size(); ++i) {
    sum += (geometry::apply(ws_from_rc, measured[i]) - targets[i]).norm();
  }
  result.mapped_mean_error_mm = sum / static_cast<double>(targets.size());
  return result;
}

ExtrinsicCheckResult run_extrinsic_check(const ScenarioConfig& cfg, double corner_sigma,
                                         std::mt19937_64& rng) {
  const camera::StereoRig rig = cfg.rig.build();
  const camera::Chessboard board = cfg.calibration.board();
  const std::vector<Point3> corners = board.corners_ws();

  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<camera::Pixel> pixels;
  pixels.reserve(corners.size());
  for (const auto& p : corners) {
    camera::Pixel px = camera::project(rig, camera::Side::Left, p);
    px.u += corner_sigma * g(rng);
    px.v += corner_sigma * g(rng);
    pixels.push_back(px);
  }

  ExtrinsicCheckResult result;
  result.estimate = camera::estimate_extrinsics(board, pixels, rig.left);
  result.translation_error_mm =
      (result.estimate.ee_from_ws.translation - rig.ee_from_ws.translation).norm();
  result.rotation_error_rad = geometry::rotation_angle_between(
      result.estimate.ee_from_ws.rotation, rig.ee_from_ws.rotation);

  // Back-project each detected corner onto the estimated board plane (z = 0 of
  // the estimated /ws) and compare with where the corner really is.
  const RigidTransform ws_from_ee = geometry::invert(result.estimate.ee_from_ws);
  const int checked = std::min<int>(cfg.calibration.checked_corners,
                                    static_cast<int>(corners.size()));
  double sum = 0.0;
  for (int i = 0; i < checked; ++i) {
    const Eigen::Vector3d dir_cam((pixels[i].u - rig.left.cx) / rig.left.fx,
                                  (pixels[i].v - rig.left.cy) / rig.left.fy, 1.0);
    const Eigen::Vector3d origin_ws = ws_from_ee.translation;
    const Eigen::Vector3d dir_ws = ws_from_ee.rotation * dir_cam;
    if (std::abs(dir_ws.z()) < 1e-12) continue;
    const double s = -origin_ws.z() / dir_ws.z();
    const Point3 mapped = origin_ws + s * dir_ws;
    sum += (mapped - corners[static_cast<size_t>(i)]).norm();
  }
  result.mapped_corner_mean_mm = sum / checked;
  return result;
}

}  // namespace

CalibrationReport simulate_calibration(const ScenarioConfig& cfg, uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double tip_sigma = cfg.noise.calibration_noise ? cfg.noise.tip_sigma_mm : 0.0;
  const double corner_sigma = cfg.noise.calibration_noise ? cfg.noise.corner_sigma_px : 0.0;

  CalibrationReport report;
  const double extent = cfg.calibration.plane_half_extent_mm;
  const int n = cfg.calibration.plane_scan_points;
  const Eigen::Vector3d ex = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d ey = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d ez = Eigen::Vector3d::UnitZ();
  report.planes[0] = scan_plane(Point3::Zero(), ex, ey, n, extent, tip_sigma, rng);  // z = 0
  report.planes[1] = scan_plane(Point3::Zero(), ey, ez, n, extent, tip_sigma, rng);  // x = 0
  report.planes[2] = scan_plane(Point3::Zero(), ez, ex, n, extent, tip_sigma, rng);  // y = 0

  report.registration = run_registration(cfg, tip_sigma, rng);
  report.extrinsics = run_extrinsic_check(cfg, corner_sigma, rng);
  return report;
}

servo::CalibratedFrames calibrate_frames(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  servo::CalibratedFrames frames;
  if (!cfg.noise.calibration_noise) {
    frames.rc_from_ws = cfg.chain.build().rc_from_ws;
    frames.ee_from_ws = cfg.rig.build().ee_from_ws;
    return frames;
  }
  frames.rc_from_ws = run_registration(cfg, cfg.noise.tip_sigma_mm, rng).estimate;

  // Camera pose error: isotropic rigid perturbation about the board centre at
  // the accuracy the mapped-corner check certifies. (The single-view
  // homography estimate is kept for the calibration report; its camera-depth
  // ambiguity is an artifact of that stand-in, not of the deployed rig, so it
  // is not injected into the control loop.)
  std::normal_distribution<double> g(0.0, 1.0);
  const camera::Chessboard board = cfg.calibration.board();
  const Point3 pivot{0.5 * (board.cols - 1) * board.square_size,
                     0.5 * (board.rows - 1) * board.square_size, 0.0};
  const Eigen::Vector3d rot_vec = gauss3(rng, g, cfg.noise.ee_sigma_rot_rad);
  const Eigen::Vector3d dt = gauss3(rng, g, cfg.noise.ee_sigma_t_mm);
  RigidTransform perturb_ws;  // acts on /ws points before the true mapping
  const double angle = rot_vec.norm();
  perturb_ws.rotation = angle > 0.0
                            ? Eigen::AngleAxisd(angle, rot_vec / angle).toRotationMatrix()
                            : Eigen::Matrix3d::Identity();
  perturb_ws.translation = pivot - perturb_ws.rotation * pivot + dt;
  frames.ee_from_ws = geometry::compose(cfg.rig.build().ee_from_ws, perturb_ws);
  return frames;
}

}  // namespace ngrasp::harness
