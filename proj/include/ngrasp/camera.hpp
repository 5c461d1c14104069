#pragma once

#include <span>
#include <vector>

#include "ngrasp/geometry.hpp"

namespace ngrasp::camera {

using geometry::Point3;
using geometry::RigidTransform;

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Pinhole intrinsics, pixels; principal point inside the image.
struct CameraIntrinsics {
  double fx = 1000.0;
  double fy = 1000.0;
  double cx = 360.0;
  double cy = 288.0;
  int width = 720;
  int height = 576;

  void validate() const;
};

enum class Side { Left, Right };

/**
 * @brief Calibrated stereo pair rigidly attached to the endoscope.
 *
 * The left optical frame is the end-effector frame /ee; ee_from_ws maps
 * workspace points into it. right_from_left maps left-camera coordinates into
 * the right camera (baseline along -x for a camera sitting at +x of the left).
 */
struct StereoRig {
  CameraIntrinsics left;
  CameraIntrinsics right;
  RigidTransform right_from_left;
  RigidTransform ee_from_ws;

  RigidTransform camera_from_ws(Side side) const;
  const CameraIntrinsics& intrinsics(Side side) const;
  double baseline() const { return right_from_left.translation.norm(); }

  void validate() const;
};

/// Planar calibration target in the workspace z = 0 plane; corner (r, c) sits
/// at (c * square_size, r * square_size, 0), row-major enumeration.
struct Chessboard {
  int rows = 5;
  int cols = 7;
  double square_size = 10.0;  // mm

  int corner_count() const { return rows * cols; }
  std::vector<Point3> corners_ws() const;
};

/// Minimum camera-frame depth accepted by projection (mm).
inline constexpr double kMinDepth = 1.0;

/// Projects a workspace point into one camera; throws BehindCamera for depth < kMinDepth.
Pixel project(const StereoRig& rig, Side side, const Point3& p_ws);

/// Pinhole projection of a camera-frame point (shared by the extrinsics code).
Pixel project_camera_frame(const CameraIntrinsics& k, const Point3& p_cam);

/**
 * @brief Homogeneous DLT triangulation of one stereo correspondence.
 *
 * Stacks the four u*P3-P1 / v*P3-P2 rows from both views and takes the
 * smallest right singular vector, returning the workspace-frame point.
 * Pixels must lie within the image extended by a 20% guard band
 * (OutOfImageBounds); rays closer than 0.01 deg to parallel are rejected
 * (DegenerateRays).
 */
Point3 triangulate(const StereoRig& rig, const Pixel& left_px, const Pixel& right_px);

struct ExtrinsicsEstimate {
  RigidTransform ee_from_ws;
  double reprojection_rms_px = 0.0;
};

/**
 * @brief Board pose from one left-camera view of the chessboard.
 *
 * Normalized DLT homography between board-plane coordinates and pixels,
 * decomposed with the intrinsics; the rotation is snapped to SO(3) by SVD and
 * the translation sign fixed so the board sits in front of the camera.
 * Throws InsufficientCorners (< 4 correspondences), std::invalid_argument on
 * a count mismatch, IllConditioned when the DLT system's condition number
 * exceeds 1e12.
 */
ExtrinsicsEstimate estimate_extrinsics(const Chessboard& board, std::span<const Pixel> corners_px,
                                       const CameraIntrinsics& k);

/// ||project(p) - observed|| in pixels.
double reprojection_error(const StereoRig& rig, Side side, const Point3& p_ws,
                          const Pixel& observed);

}  // namespace ngrasp::camera
