#pragma once

// Rigid-body poses and plane parametrizations shared by every stage of the
// pipeline.
//
// Conventions used throughout the library:
//  * A Pose3 is always map-from-body: p_map = R * p_body + t.
//  * A Plane is {n, d} with n unit length and point set {p : n.p + d = 0}.
//  * PlaneMinimal is the optimizable (azimuth, elevation, distance) form:
//    n = (cos(el) cos(az), cos(el) sin(az), sin(el)).

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <string_view>

namespace sgraphs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

Mat3 skew(const Vec3& v);

/// SO(3) exponential / logarithm (rotation vector <-> rotation).
Eigen::Quaterniond so3_exp(const Vec3& omega);
Vec3 so3_log(const Eigen::Quaterniond& q);

/// Inverse of the right Jacobian of SO(3), evaluated at rotation vector phi.
Mat3 so3_right_jacobian_inverse(const Vec3& phi);

struct Pose3 {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose3 identity() { return {}; }
  static Pose3 from_rotation_translation(const Eigen::Quaterniond& q, const Vec3& t);
  /// Planar pose: rotation about +z by `yaw`, translation t.
  static Pose3 from_yaw(double yaw, const Vec3& t = Vec3::Zero());

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
  Mat4 matrix() const;
  Vec3 transform_point(const Vec3& p_body) const { return rotation * p_body + translation; }
  double yaw() const;
};

Pose3 compose(const Pose3& a, const Pose3& b);
Pose3 inverse(const Pose3& p);

/// Decoupled logarithm: [so3_log(R); t]. Rotation first, translation second.
Vec6 pose_log(const Pose3& p);
Pose3 pose_exp(const Vec6& xi);

/// Right perturbation used by the optimizer: (R Exp(w), t + R v), delta = [w; v].
Pose3 retract(const Pose3& p, const Vec6& delta);

/// Rotation angle of p (radians, in [0, pi]).
double rotation_angle(const Pose3& p);

struct Plane {
  Vec3 normal = Vec3::UnitX();
  double distance = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) + distance; }
  /// Point of the plane closest to the origin.
  Vec3 closest_point() const { return -distance * normal; }
};

/// Plane with its normal renormalized.
Plane make_plane(const Vec3& normal, double distance);

/// True when a and b describe the same point set (either orientation).
bool same_point_set(const Plane& a, const Plane& b, double tol);

struct PlaneMinimal {
  double azimuth = 0.0;    // (-pi, pi]
  double elevation = 0.0;  // [-pi/2, pi/2]
  double distance = 0.0;

  Vec3 as_vector() const { return {azimuth, elevation, distance}; }
  static PlaneMinimal from_vector(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
};

PlaneMinimal plane_to_minimal(const Plane& plane);
Plane minimal_to_plane(const PlaneMinimal& m);
/// Re-wraps azimuth/elevation into their canonical ranges without changing the plane.
PlaneMinimal normalize_minimal(const PlaneMinimal& m);

/// Unit normal of a minimal plane and its derivatives w.r.t. azimuth and elevation.
Vec3 minimal_normal(double azimuth, double elevation);
Vec3 minimal_normal_d_azimuth(double azimuth, double elevation);
Vec3 minimal_normal_d_elevation(double azimuth, double elevation);

enum class PlaneAxis { X, Y, Horizontal };
enum class PlaneSign { A, B };  // A: dominant normal component > 0

struct PlaneClass {
  PlaneAxis axis = PlaneAxis::X;
  PlaneSign sign = PlaneSign::A;

  bool operator==(const PlaneClass&) const = default;
  bool is_wall() const { return axis != PlaneAxis::Horizontal; }
};

std::string_view to_string(PlaneAxis axis);
std::string_view to_string(PlaneSign sign);

/// Expresses a map-frame plane in the body frame of `pose` (map-from-body).
/// n_body = R^T n_map, d_body = d_map + n_map . t
Plane transform_plane_to_body(const Pose3& pose, const Plane& plane_map);
/// Inverse of transform_plane_to_body.
Plane transform_plane_to_map(const Pose3& pose, const Plane& plane_body);

/// Returns (-n, -d) when d > 0, otherwise the plane unchanged. The point set
/// is preserved and the normal points from the origin towards the plane.
Plane canonicalize_away_from_origin(const Plane& plane);

/// Horizontal iff |nz| >= max(|nx|, |ny|); otherwise X iff |nx| >= |ny|
/// (ties go to X). Sign A iff the dominant component is positive.
PlaneClass classify_plane(const Plane& plane);

}  // namespace sgraphs
