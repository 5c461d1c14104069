#pragma once

#include <array>
#include <optional>
#include <random>
#include <vector>

#include "ngrasp/camera.hpp"
#include "ngrasp/geometry.hpp"

namespace ngrasp::perception {

using camera::Pixel;
using camera::StereoRig;
using geometry::Circle3;
using geometry::Plane;
using geometry::Point3;

/// Marker indices along the needle body.
enum MarkerId : int { kTipSide = 0, kMiddle = 1, kTailSide = 2 };

/**
 * @brief Ground-truth needle: a circular arc carrying three markers.
 *
 * Markers sit on the circle at fixed angles (tip-side, middle, tail-side in
 * decreasing angular order along the arc), rigidly following the pose.
 */
struct NeedleState {
  Circle3 circle;
  std::array<double, 3> marker_angles = {0.7, 0.0, -0.7};  // rad on the circle

  std::array<Point3, 3> markers() const;
  Point3 middle_marker() const { return marker_point(kMiddle); }
  Point3 marker_point(int id) const { return circle.point_at(marker_angles[id]); }
};

/// Builds a needle from its plane pose; the circle center sits at `center`,
/// the plane normal is `normal`, marker angles are offsets from `phase`.
NeedleState make_needle(const Point3& center, const Eigen::Vector3d& normal, double radius,
                        const std::array<double, 3>& marker_angles, double phase = 0.0);

struct MarkerDetection {
  int marker_id = 0;
  double t = 0.0;  // s
  Pixel left;
  Pixel right;
};

/// Zero-mean Gaussian pixel noise plus per-marker Bernoulli dropout.
struct NoiseModel {
  double pixel_sigma = 0.0;   // px, both axes, both views
  double dropout_prob = 0.0;  // per marker per tick

  void validate() const;
};

struct RateConfig {
  double camera_hz = 25.0;
  double tracker_hz = 8.0;
  double control_hz = 100.0;

  void validate() const;
  double tracker_period() const { return 1.0 / tracker_hz; }
};

/**
 * @brief Deterministic simulated marker tracker.
 *
 * Emits one detection set per tracker tick: a tick fires whenever
 * floor(t * tracker_hz) advances past the last emitted index. Markers that
 * fall outside either camera's view (or behind it) are dropped for that tick,
 * as are Bernoulli dropouts. The stream is bit-reproducible for a given seed
 * and call sequence.
 */
class ObservationStream {
 public:
  ObservationStream(RateConfig rates, NoiseModel noise, uint64_t seed);

  /// Detections for time t; empty unless a tracker tick fires at t.
  std::vector<MarkerDetection> observe(const NeedleState& needle, const StereoRig& rig, double t);

  int ticks_emitted() const { return ticks_emitted_; }

 private:
  RateConfig rates_;
  NoiseModel noise_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  long long next_tick_ = 0;
  int ticks_emitted_ = 0;
};

/// Marker position reconstructed from one detection via stereo triangulation.
struct ReconstructedMarker {
  int marker_id = 0;
  double t = 0.0;
  Point3 p_ws;
};

/// Triangulates each detection with the rig's calibration; detections whose
/// triangulation degenerates are skipped.
std::vector<ReconstructedMarker> reconstruct_markers(std::span<const MarkerDetection> detections,
                                                     const StereoRig& rig);

/// Rank-ratio below which three markers are treated as collinear. Marker
/// triplets spanning less than roughly a 4 degree arc fail this; the shared
/// geometry threshold (1e-9) is far too permissive to protect grasp planning.
inline constexpr double kMarkerCollinearRatio = 1e-2;

struct NeedleGeometry {
  Plane plane;
  Circle3 circle;
  Point3 tangent_at_middle;  ///< unit, oriented tail -> tip
};

/**
 * @brief Needle plane, circle and oriented grasp tangent from the 3 markers.
 *
 * Markers are (tip-side, middle, tail-side). The tangent at the middle marker
 * is oriented so it points from the tail side toward the tip side. Throws
 * CollinearPoints when the markers' rank ratio falls below
 * kMarkerCollinearRatio.
 */
NeedleGeometry needle_plane_and_grasp_geometry(const std::array<Point3, 3>& markers);

}  // namespace ngrasp::perception
