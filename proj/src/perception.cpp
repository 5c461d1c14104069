#include "ngrasp/perception.hpp"

#include <cmath>

namespace ngrasp::perception {

std::array<Point3, 3> NeedleState::markers() const {
  return {marker_point(kTipSide), marker_point(kMiddle), marker_point(kTailSide)};
}

NeedleState make_needle(const Point3& center, const Eigen::Vector3d& normal, double radius,
                        const std::array<double, 3>& marker_angles, double phase) {
  if (radius <= 0.0) throw ConfigError("make_needle: radius must be positive");
  NeedleState needle;
  needle.circle.center = center;
  needle.circle.radius = radius;
  needle.circle.plane = geometry::make_plane(normal, -normal.normalized().dot(center));
  for (int i = 0; i < 3; ++i) needle.marker_angles[i] = marker_angles[i] + phase;
  return needle;
}

void NoiseModel::validate() const {
  if (pixel_sigma < 0.0) throw ConfigError("noise: pixel_sigma must be >= 0");
  if (dropout_prob < 0.0 || dropout_prob > 1.0) {
    throw ConfigError("noise: dropout_prob must be in [0, 1]");
  }
}

void RateConfig::validate() const {
  if (camera_hz <= 0.0 || tracker_hz <= 0.0 || control_hz <= 0.0) {
    throw ConfigError("rates: all rates must be positive");
  }
  if (tracker_hz > camera_hz) {
    throw ConfigError("rates: tracker_hz cannot exceed camera_hz");
  }
}

ObservationStream::ObservationStream(RateConfig rates, NoiseModel noise, uint64_t seed)
    : rates_(rates), noise_(noise), rng_(seed) {
  rates_.validate();
  noise_.validate();
}

std::vector<MarkerDetection> ObservationStream::observe(const NeedleState& needle,
                                                        const StereoRig& rig, double t) {
  const long long tick = static_cast<long long>(std::floor(t * rates_.tracker_hz));
  if (tick < next_tick_) return {};
  next_tick_ = tick + 1;
  ++ticks_emitted_;

  std::vector<MarkerDetection> detections;
  const auto markers = needle.markers();
  for (int id = 0; id < 3; ++id) {
    // Draw noise unconditionally so the stream stays reproducible regardless
    // of which markers happen to be visible.
    const double n[4] = {gauss_(rng_), gauss_(rng_), gauss_(rng_), gauss_(rng_)};
    const bool dropped = uniform_(rng_) < noise_.dropout_prob;
    if (dropped) continue;

    Pixel left_px, right_px;
    try {
      left_px = camera::project(rig, camera::Side::Left, markers[id]);
      right_px = camera::project(rig, camera::Side::Right, markers[id]);
    } catch (const BehindCamera&) {
      continue;  // visibility dropout
    }
    const auto in_view = [](const camera::CameraIntrinsics& k, const Pixel& px) {
      return px.u >= 0.0 && px.u <= k.width && px.v >= 0.0 && px.v <= k.height;
    };
    if (!in_view(rig.left, left_px) || !in_view(rig.right, right_px)) continue;

    MarkerDetection det;
    det.marker_id = id;
    det.t = t;
    det.left = {left_px.u + noise_.pixel_sigma * n[0], left_px.v + noise_.pixel_sigma * n[1]};
    det.right = {right_px.u + noise_.pixel_sigma * n[2], right_px.v + noise_.pixel_sigma * n[3]};
    detections.push_back(det);
  }
  return detections;
}

std::vector<ReconstructedMarker> reconstruct_markers(std::span<const MarkerDetection> detections,
                                                     const StereoRig& rig) {
  std::vector<ReconstructedMarker> out;
  out.reserve(detections.size());
  for (const auto& det : detections) {
    try {
      out.push_back({det.marker_id, det.t, camera::triangulate(rig, det.left, det.right)});
    } catch (const Error&) {
      // Degenerate or out-of-band measurement: skip, downstream sees a gap.
    }
  }
  return out;
}

NeedleGeometry needle_plane_and_grasp_geometry(const std::array<Point3, 3>& markers) {
  // Scale-free rank test on the centered marker matrix.
  const Point3 centroid = (markers[0] + markers[1] + markers[2]) / 3.0;
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i) m.row(i) = (markers[i] - centroid).transpose();
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(m);
  const auto& sv = svd.singularValues();
  if (sv[0] <= 0.0 || sv[1] / sv[0] < kMarkerCollinearRatio) {
    throw CollinearPoints("needle geometry: markers are too close to collinear");
  }

  NeedleGeometry geo;
  geo.circle = geometry::circle_through_points(markers[kTipSide], markers[kMiddle],
                                               markers[kTailSide]);
  geo.plane = geo.circle.plane;
  Point3 tangent = geo.circle.tangent_at(markers[kMiddle]);
  if (tangent.dot(markers[kTipSide] - markers[kTailSide]) < 0.0) tangent = -tangent;
  geo.tangent_at_middle = tangent;
  return geo;
}

}  // namespace ngrasp::perception
