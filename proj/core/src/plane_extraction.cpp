#include "sgraphs/plane_extraction.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

namespace sgraphs {

Plane fit_plane(std::span<const Vec3> points) {
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 q = p - centroid;
    scatter += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  const Vec3 normal = eig.eigenvectors().col(0).normalized();
  return Plane{normal, -normal.dot(centroid)};
}

Mat3 plane_fit_covariance(const Plane& plane, std::span<const Vec3> points, double eigen_floor) {
  const PlaneMinimal m = plane_to_minimal(plane);
  const Vec3 dn_daz = minimal_normal_d_azimuth(m.azimuth, m.elevation);
  const Vec3 dn_del = minimal_normal_d_elevation(m.azimuth, m.elevation);
  Mat3 info = Mat3::Zero();
  double sq_sum = 0.0;
  for (const auto& p : points) {
    const Eigen::RowVector3d j(dn_daz.dot(p), dn_del.dot(p), 1.0);
    info += j.transpose() * j;
    const double r = plane.signed_distance(p);
    sq_sum += r * r;
  }
  const double dof = std::max<double>(1.0, static_cast<double>(points.size()) - 3.0);
  const double sigma2 = sq_sum / dof;
  Eigen::SelfAdjointEigenSolver<Mat3> eig(info);
  Vec3 variances;
  for (int i = 0; i < 3; ++i) {
    const double lambda = eig.eigenvalues()(i);
    variances(i) = lambda > 1e-12 ? sigma2 / lambda : std::numeric_limits<double>::infinity();
    variances(i) = std::max(variances(i), eigen_floor);
    if (!std::isfinite(variances(i))) variances(i) = 1.0;
  }
  Mat3 cov = eig.eigenvectors() * variances.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (cov + cov.transpose());
}

namespace {

std::vector<std::size_t> collect_inliers(const Plane& plane, const std::vector<Vec3>& points,
                                         const std::vector<std::size_t>& candidates, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t idx : candidates) {
    if (std::abs(plane.signed_distance(points[idx])) <= threshold) out.push_back(idx);
  }
  return out;
}

std::vector<Vec3> gather(const std::vector<Vec3>& points, const std::vector<std::size_t>& idx) {
  std::vector<Vec3> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(points[i]);
  return out;
}

}  // namespace

std::vector<PlaneObservation> extract_planes(const KeyframeCloud& cloud, const RansacParams& params) {
  std::vector<PlaneObservation> result;
  const auto& pts = cloud.points;
  if (pts.size() < 3) return result;

  std::mt19937_64 rng(params.seed);
  std::vector<std::size_t> remaining(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) remaining[i] = i;

  while (result.size() < params.max_planes && remaining.size() >= std::max<std::size_t>(3, params.min_inliers)) {
    std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
    std::size_t best_count = 0;
    Plane best;
    for (int it = 0; it < params.iterations; ++it) {
      const std::size_t i0 = remaining[pick(rng)];
      const std::size_t i1 = remaining[pick(rng)];
      const std::size_t i2 = remaining[pick(rng)];
      if (i0 == i1 || i1 == i2 || i0 == i2) continue;
      const Vec3 n = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]);
      const double norm = n.norm();
      if (norm < 1e-9) continue;
      const Plane hyp{n / norm, -(n / norm).dot(pts[i0])};
      std::size_t count = 0;
      for (std::size_t idx : remaining) {
        if (std::abs(hyp.signed_distance(pts[idx])) <= params.inlier_threshold) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best = hyp;
      }
    }
    if (best_count < params.min_inliers) break;

    // Two least-squares refinement passes over the consensus set.
    auto inliers = collect_inliers(best, pts, remaining, params.inlier_threshold);
    Plane refined = fit_plane(gather(pts, inliers));
    inliers = collect_inliers(refined, pts, remaining, params.inlier_threshold);
    if (inliers.size() < params.min_inliers) break;
    const auto inlier_pts = gather(pts, inliers);
    refined = fit_plane(inlier_pts);

    if (refined.distance < 0.0) refined = Plane{-refined.normal, -refined.distance};

    PlaneObservation obs;
    obs.keyframe_id = cloud.keyframe_id;
    obs.plane_body = refined;
    obs.covariance = plane_fit_covariance(refined, inlier_pts);
    obs.inliers = inliers;
    result.push_back(std::move(obs));

    std::vector<std::size_t> next;
    next.reserve(remaining.size() - inliers.size());
    std::size_t k = 0;
    for (std::size_t idx : remaining) {
      if (k < inliers.size() && inliers[k] == idx) {
        ++k;
        continue;
      }
      next.push_back(idx);
    }
    remaining = std::move(next);
  }
  return result;
}

Plane observation_to_map(const PlaneObservation& obs, const Pose3& keyframe_pose) {
  return transform_plane_to_map(keyframe_pose, obs.plane_body);
}

double PlaneAssociationParams::mahalanobis_gate() const {
  return gate_m / std::sqrt(default_covariance(2, 2));
}

double plane_mahalanobis(const PlaneMinimal& a, const PlaneMinimal& b, const Mat3& covariance) {
  const Vec3 delta(wrap_angle(a.azimuth - b.azimuth), a.elevation - b.elevation, a.distance - b.distance);
  return std::sqrt(delta.dot(covariance.ldlt().solve(delta)));
}

double normal_angle(const Plane& a, const Plane& b) {
  return std::acos(std::clamp(a.normal.normalized().dot(b.normal.normalized()), -1.0, 1.0));
}

std::optional<PlaneMatch> associate_plane(const Plane& candidate_map, const Mat3& covariance,
                                          std::span<const PlaneLandmark> landmarks,
                                          const PlaneAssociationParams& params) {
  const PlaneClass cls = classify_plane(candidate_map);
  const PlaneMinimal cand = plane_to_minimal(candidate_map);
  const double gate = params.mahalanobis_gate();
  std::optional<PlaneMatch> best;
  for (const auto& lm : landmarks) {
    if (lm.plane_class.axis != cls.axis) continue;
    if (normal_angle(candidate_map, lm.plane()) > params.max_normal_angle) continue;
    const Mat3& metric = lm.covariance ? *lm.covariance : covariance;
    const double dist = plane_mahalanobis(cand, lm.plane_map, metric);
    if (dist > gate) continue;
    if (!best || dist < best->mahalanobis) best = PlaneMatch{lm.id, dist};
  }
  return best;
}

}  // namespace sgraphs
