#pragma once

#include <random>

#include "ngrasp/config.hpp"

namespace ngrasp::harness {

/// One orthogonal-plane probe scan fitted by total least squares.
struct PlaneScanResult {
  double d_mean_mm = 0.0;   ///< mean orthogonal distance to the fitted plane
  double max_abs_mm = 0.0;
};

/// Grasper-tip registration of the workspace into the remote-center frame.
struct RegistrationResult {
  geometry::RigidTransform estimate;  ///< rc_from_ws
  double translation_error_mm = 0.0;
  double rotation_error_rad = 0.0;
  double rms_residual_mm = 0.0;
  double mapped_mean_error_mm = 0.0;  ///< mean ||estimate^-1(meas) - truth||
};

/// Chessboard pose check of the camera-to-workspace transform.
struct ExtrinsicCheckResult {
  camera::ExtrinsicsEstimate estimate;  ///< ee_from_ws
  double translation_error_mm = 0.0;
  double rotation_error_rad = 0.0;
  double mapped_corner_mean_mm = 0.0;  ///< back-projected corner error in /ws
};

struct CalibrationReport {
  std::array<PlaneScanResult, 3> planes;  ///< z = 0, x = 0, y = 0 scans
  RegistrationResult registration;
  ExtrinsicCheckResult extrinsics;
};

/// Runs the three calibration procedures with the scenario noise profile.
CalibrationReport simulate_calibration(const ScenarioConfig& cfg, uint64_t seed);

/// Transform estimates a trial's servo runs on: exact copies of the ground
/// truth when calibration noise is disabled, otherwise fresh noisy estimates
/// drawn from rng.
servo::CalibratedFrames calibrate_frames(const ScenarioConfig& cfg, std::mt19937_64& rng);

}  // namespace ngrasp::harness
