#pragma once

#include "sgraphs/geometry.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace sgraphs {

using LandmarkId = int;
using KeyframeId = int;

struct KeyframeCloud {
  KeyframeId keyframe_id = 0;
  std::vector<Vec3> points;  // body frame, meters
};

struct RansacParams {
  double inlier_threshold = 0.05;  // m
  std::size_t min_inliers = 100;
  std::size_t max_planes = 8;
  int iterations = 300;  // per plane
  std::uint64_t seed = 42;
};

/// A plane fitted to one keyframe cloud. The normal is oriented towards the
/// sensor (d_body >= 0), so the observing robot lies on the positive side.
struct PlaneObservation {
  KeyframeId keyframe_id = 0;
  Plane plane_body;
  std::vector<std::size_t> inliers;
  Mat3 covariance = Mat3::Identity();  // over (azimuth, elevation, distance)
};

/// Sequential RANSAC: fit, refit by least squares, strip inliers, repeat.
/// Deterministic for a fixed params.seed.
std::vector<PlaneObservation> extract_planes(const KeyframeCloud& cloud, const RansacParams& params);

/// Total-least-squares plane through the points (requires >= 3 non-collinear points).
Plane fit_plane(std::span<const Vec3> points);

/// First-order covariance of the minimal plane parameters given the inlier
/// residual scatter; eigenvalues are floored at `eigen_floor`.
Mat3 plane_fit_covariance(const Plane& plane, std::span<const Vec3> points, double eigen_floor = 1e-6);

/// Body-frame observation expressed in the map frame (inverse of
/// transform_plane_to_body). Sensor-facing orientation is preserved.
Plane observation_to_map(const PlaneObservation& obs, const Pose3& keyframe_pose);

struct PlaneLandmark {
  LandmarkId id = 0;
  PlaneMinimal plane_map;
  PlaneClass plane_class;
  std::vector<Vec3> points_map;             // accumulated inlier points (map frame)
  std::set<KeyframeId> observing_keyframes;
  std::optional<Mat3> covariance;           // marginal, when known

  Plane plane() const { return minimal_to_plane(plane_map); }
};

struct PlaneAssociationParams {
  double gate_m = 0.35;  // plane matching threshold
  Mat3 default_covariance = Eigen::Vector3d(0.01, 0.01, 0.0225).asDiagonal();
  double max_normal_angle = deg2rad(15.0);

  /// Gate in Mahalanobis units: gate_m / sigma_d of the default covariance.
  double mahalanobis_gate() const;
};

struct PlaneMatch {
  LandmarkId landmark_id = 0;
  double mahalanobis = 0.0;
};

/// Mahalanobis distance in (azimuth, elevation, distance) with azimuth wrapping.
double plane_mahalanobis(const PlaneMinimal& a, const PlaneMinimal& b, const Mat3& covariance);

/// Angle between two plane normals, radians.
double normal_angle(const Plane& a, const Plane& b);

/// Nearest landmark of the same axis class within the gate, or nullopt.
/// The metric is the landmark's marginal covariance when it has one, else
/// `covariance` (the caller's gating covariance for the candidate).
std::optional<PlaneMatch> associate_plane(const Plane& candidate_map, const Mat3& covariance,
                                          std::span<const PlaneLandmark> landmarks,
                                          const PlaneAssociationParams& params);

}  // namespace sgraphs
