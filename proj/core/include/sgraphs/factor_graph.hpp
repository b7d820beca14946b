#pragma once

#include "sgraphs/geometry.hpp"

#include <array>
#include <map>
#include <set>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace sgraphs {

using NodeId = int;

enum class NodeKind { KeyframePose, WallPlane, Room, TwoWallRoom, Floor };

std::string_view to_string(NodeKind kind);

struct VariableNode {
  NodeId id = 0;
  NodeKind kind = NodeKind::KeyframePose;
  std::variant<Pose3, PlaneMinimal, Vec2> state;
  bool fixed = false;

  const Pose3& pose() const { return std::get<Pose3>(state); }
  const PlaneMinimal& plane() const { return std::get<PlaneMinimal>(state); }
  const Vec2& point() const { return std::get<Vec2>(state); }
  /// Dimension of the local perturbation: 6 for poses, 3 for planes, 2 otherwise.
  int tangent_dim() const;
};

enum class FactorKind { Odometry, PosePlane, FourWallRoom, TwoWallRoom, FloorRoom, DuplicatePlane };

std::string_view to_string(FactorKind kind);
int residual_dim(FactorKind kind);

/// Node order and measurement layout per kind:
///   Odometry        (x_i, x_j)                  [qw qx qy qz tx ty tz] of x_i^-1 x_j
///   PosePlane       (keyframe, wall)            [azimuth elevation distance] in the body frame
///   FourWallRoom    (room, x_a, x_b, y_a, y_b)  empty
///   TwoWallRoom     (room, a, b)                cluster centre [cx cy]
///   FloorRoom       (floor, room)               [dx dy] = room - floor at detection
///   DuplicatePlane  (keep, merge)               empty
struct Factor {
  FactorKind kind = FactorKind::Odometry;
  std::vector<NodeId> nodes;
  Eigen::VectorXd measurement;
  Eigen::MatrixXd information;
};

Factor make_odometry_factor(NodeId i, NodeId j, const Pose3& measurement, const Eigen::Matrix<double, 6, 6>& info);
Factor make_pose_plane_factor(NodeId keyframe, NodeId wall, const PlaneMinimal& measurement, const Mat3& info);
Factor make_four_wall_room_factor(NodeId room, NodeId x_a, NodeId x_b, NodeId y_a, NodeId y_b,
                                  const Eigen::Matrix2d& info);
Factor make_two_wall_room_factor(NodeId room, NodeId a, NodeId b, const Vec2& cluster_center,
                                 const Eigen::Matrix2d& info);
Factor make_floor_room_factor(NodeId floor, NodeId room, const Vec2& delta, const Eigen::Matrix2d& info);
Factor make_duplicate_plane_factor(NodeId keep, NodeId merge, const Mat3& info);

Pose3 odometry_measurement(const Factor& f);

// Residuals. Jacobian outputs are optional and taken w.r.t. each argument's
// local perturbation (poses: [w; v] right perturbation, planes: additive on
// (azimuth, elevation, distance), points: additive).

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;
using Mat23 = Eigen::Matrix<double, 2, 3>;

/// log(meas^-1 (x_i^-1 x_j)), rotation part first.
Vec6 residual_odometry(const Pose3& x_i, const Pose3& x_j, const Pose3& meas, Mat6* J_i = nullptr,
                       Mat6* J_j = nullptr);

/// Map plane expressed in the body frame of x, minus the measurement (azimuth wrapped).
Vec3 residual_pose_plane(const Pose3& x, const PlaneMinimal& plane_map, const PlaneMinimal& meas_body,
                         Mat36* J_x = nullptr, Mat3* J_plane = nullptr);

/// room - centre implied by the four walls.
Vec2 residual_four_wall_room(const Vec2& room, const PlaneMinimal& x_a, const PlaneMinimal& x_b,
                             const PlaneMinimal& y_a, const PlaneMinimal& y_b,
                             std::array<Mat23, 4>* J_walls = nullptr);

/// room - two-wall centre for the constant cluster centre c.
Vec2 residual_two_wall_room(const Vec2& room, const PlaneMinimal& a, const PlaneMinimal& b, const Vec2& c,
                            Mat23* J_a = nullptr, Mat23* J_b = nullptr);

/// delta - (room - floor).
Vec2 residual_floor_room(const Vec2& floor, const Vec2& room, const Vec2& delta);

/// (p - q) with the azimuth wrapped.
Vec3 residual_duplicate_plane(const PlaneMinimal& p, const PlaneMinimal& q);

class SituationalGraph {
 public:
  NodeId add_keyframe(const Pose3& pose, bool fixed = false);
  NodeId add_wall(const PlaneMinimal& plane);
  NodeId add_room(const Vec2& center, bool two_wall = false);
  NodeId add_floor(const Vec2& center);
  /// Inserts a node with an explicit id. Throws if the id is taken or the
  /// state does not match the kind.
  void insert_node(const VariableNode& node);
  /// Throws std::invalid_argument when a node id does not resolve, node kinds
  /// do not fit the factor kind, or payload sizes are wrong.
  void add_factor(Factor factor);

  bool has_node(NodeId id) const { return nodes_.count(id) != 0; }
  const VariableNode& node(NodeId id) const;
  VariableNode& node(NodeId id);
  const std::map<NodeId, VariableNode>& nodes() const { return nodes_; }
  const std::vector<Factor>& factors() const { return factors_; }
  std::vector<Factor>& mutable_factors() { return factors_; }
  const std::set<NodeId>& layer(NodeKind kind) const;

  Pose3 drift = Pose3::identity();

 private:
  NodeId insert(NodeKind kind, std::variant<Pose3, PlaneMinimal, Vec2> state, bool fixed);

  std::map<NodeId, VariableNode> nodes_;
  std::vector<Factor> factors_;
  std::map<NodeKind, std::set<NodeId>> layers_;
  NodeId next_id_ = 0;
};

/// Stacked residual of one factor at the current graph state.
Eigen::VectorXd factor_residual(const SituationalGraph& graph, const Factor& factor);

/// Residual and one Jacobian block per connected node (analytic).
struct Linearization {
  Eigen::VectorXd residual;
  std::vector<Eigen::MatrixXd> jacobians;
};
Linearization linearize(const SituationalGraph& graph, const Factor& factor);

/// Applies a local perturbation of the node's tangent dimension.
void apply_increment(VariableNode& node, const Eigen::VectorXd& delta);

/// Sum of r^T info r over all factors.
double total_cost(const SituationalGraph& graph);

/// drift = optimized latest keyframe pose * inverse(latest odometry pose); stored on the graph.
Pose3 update_drift(SituationalGraph& graph, const Pose3& latest_odom_pose);

struct KeyframeGates {
  double translation = 1.0;          // m
  double rotation = deg2rad(15.0);   // rad
};

bool add_keyframe_if_due(const Pose3& last_keyframe, const Pose3& current_odom, const KeyframeGates& gates);

}  // namespace sgraphs
