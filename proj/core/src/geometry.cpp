#include "sgraphs/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace sgraphs {

double wrap_angle(double angle) {
  double a = std::fmod(angle + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Quaterniond so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < 1e-12) {
    Eigen::Quaterniond q(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z());
    return q.normalized();
  }
  return Eigen::Quaterniond(Eigen::AngleAxisd(theta, omega / theta));
}

Vec3 so3_log(const Eigen::Quaterniond& q_in) {
  Eigen::Quaterniond q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 v = q.vec();
  const double sin_half = v.norm();
  if (sin_half < 1e-12) return 2.0 * v;
  const double theta = 2.0 * std::atan2(sin_half, q.w());
  return theta * v / sin_half;
}

Mat3 so3_right_jacobian_inverse(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 phi_x = skew(phi);
  if (theta < 1e-6) {
    return Mat3::Identity() + 0.5 * phi_x + (1.0 / 12.0) * phi_x * phi_x;
  }
  const double coef = 1.0 / (theta * theta) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Mat3::Identity() + 0.5 * phi_x + coef * phi_x * phi_x;
}

Pose3 Pose3::from_rotation_translation(const Eigen::Quaterniond& q, const Vec3& t) {
  Pose3 p;
  p.rotation = q.normalized();
  p.translation = t;
  return p;
}

Pose3 Pose3::from_yaw(double yaw, const Vec3& t) {
  return from_rotation_translation(Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3::UnitZ())), t);
}

Mat4 Pose3::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

double Pose3::yaw() const {
  const Mat3 r = rotation_matrix();
  return std::atan2(r(1, 0), r(0, 0));
}

Pose3 compose(const Pose3& a, const Pose3& b) {
  Pose3 out;
  out.rotation = (a.rotation * b.rotation).normalized();
  out.translation = a.translation + a.rotation * b.translation;
  return out;
}

Pose3 inverse(const Pose3& p) {
  Pose3 out;
  out.rotation = p.rotation.conjugate().normalized();
  out.translation = -(out.rotation * p.translation);
  return out;
}

Vec6 pose_log(const Pose3& p) {
  Vec6 xi;
  xi.head<3>() = so3_log(p.rotation);
  xi.tail<3>() = p.translation;
  return xi;
}

Pose3 pose_exp(const Vec6& xi) {
  return Pose3::from_rotation_translation(so3_exp(xi.head<3>()), xi.tail<3>());
}

Pose3 retract(const Pose3& p, const Vec6& delta) {
  Pose3 out;
  out.rotation = (p.rotation * so3_exp(delta.head<3>())).normalized();
  out.translation = p.translation + p.rotation * delta.tail<3>();
  return out;
}

double rotation_angle(const Pose3& p) { return so3_log(p.rotation).norm(); }

Plane make_plane(const Vec3& normal, double distance) {
  const double n = normal.norm();
  return Plane{normal / n, distance / n};
}

bool same_point_set(const Plane& a, const Plane& b, double tol) {
  const bool same = (a.normal - b.normal).norm() <= tol && std::abs(a.distance - b.distance) <= tol;
  const bool flipped = (a.normal + b.normal).norm() <= tol && std::abs(a.distance + b.distance) <= tol;
  return same || flipped;
}

Vec3 minimal_normal(double az, double el) {
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

Vec3 minimal_normal_d_azimuth(double az, double el) {
  return {-std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), 0.0};
}

Vec3 minimal_normal_d_elevation(double az, double el) {
  return {-std::sin(el) * std::cos(az), -std::sin(el) * std::sin(az), std::cos(el)};
}

PlaneMinimal plane_to_minimal(const Plane& plane) {
  const Vec3 n = plane.normal.normalized();
  PlaneMinimal m;
  m.elevation = std::asin(std::clamp(n.z(), -1.0, 1.0));
  // Gimbal pole: azimuth is undefined, fixed to 0.
  m.azimuth = (std::abs(n.z()) >= 1.0 - 1e-15) ? 0.0 : wrap_angle(std::atan2(n.y(), n.x()));
  m.distance = plane.distance;
  return m;
}

Plane minimal_to_plane(const PlaneMinimal& m) {
  return Plane{minimal_normal(m.azimuth, m.elevation), m.distance};
}

PlaneMinimal normalize_minimal(const PlaneMinimal& m) {
  if (m.elevation >= -kPi / 2.0 && m.elevation <= kPi / 2.0) {
    return {wrap_angle(m.azimuth), m.elevation, m.distance};
  }
  return plane_to_minimal(minimal_to_plane(m));
}

std::string_view to_string(PlaneAxis axis) {
  switch (axis) {
    case PlaneAxis::X: return "x";
    case PlaneAxis::Y: return "y";
    case PlaneAxis::Horizontal: return "horizontal";
  }
  return "?";
}

std::string_view to_string(PlaneSign sign) { return sign == PlaneSign::A ? "a" : "b"; }

Plane transform_plane_to_body(const Pose3& pose, const Plane& plane_map) {
  Plane out;
  out.normal = pose.rotation.conjugate() * plane_map.normal;
  out.distance = plane_map.distance + plane_map.normal.dot(pose.translation);
  return out;
}

Plane transform_plane_to_map(const Pose3& pose, const Plane& plane_body) {
  Plane out;
  out.normal = pose.rotation * plane_body.normal;
  out.distance = plane_body.distance - out.normal.dot(pose.translation);
  return out;
}

Plane canonicalize_away_from_origin(const Plane& plane) {
  if (plane.distance > 0.0) return Plane{-plane.normal, -plane.distance};
  return plane;
}

PlaneClass classify_plane(const Plane& plane) {
  const Vec3& n = plane.normal;
  const double ax = std::abs(n.x());
  const double ay = std::abs(n.y());
  const double az = std::abs(n.z());
  PlaneClass c;
  double dominant = 0.0;
  if (az >= std::max(ax, ay)) {
    c.axis = PlaneAxis::Horizontal;
    dominant = n.z();
  } else if (ax >= ay) {
    c.axis = PlaneAxis::X;
    dominant = n.x();
  } else {
    c.axis = PlaneAxis::Y;
    dominant = n.y();
  }
  c.sign = dominant > 0.0 ? PlaneSign::A : PlaneSign::B;
  return c;
}

}  // namespace sgraphs
