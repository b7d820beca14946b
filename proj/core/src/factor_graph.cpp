#include "sgraphs/factor_graph.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sgraphs {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::KeyframePose: return "keyframe";
    case NodeKind::WallPlane: return "wall";
    case NodeKind::Room: return "room";
    case NodeKind::TwoWallRoom: return "two_wall_room";
    case NodeKind::Floor: return "floor";
  }
  return "?";
}

std::string_view to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::Odometry: return "odometry";
    case FactorKind::PosePlane: return "pose_plane";
    case FactorKind::FourWallRoom: return "four_wall_room";
    case FactorKind::TwoWallRoom: return "two_wall_room";
    case FactorKind::FloorRoom: return "floor_room";
    case FactorKind::DuplicatePlane: return "duplicate_plane";
  }
  return "?";
}

int residual_dim(FactorKind kind) {
  switch (kind) {
    case FactorKind::Odometry: return 6;
    case FactorKind::PosePlane: return 3;
    case FactorKind::FourWallRoom: return 2;
    case FactorKind::TwoWallRoom: return 2;
    case FactorKind::FloorRoom: return 2;
    case FactorKind::DuplicatePlane: return 3;
  }
  return 0;
}

int VariableNode::tangent_dim() const {
  switch (kind) {
    case NodeKind::KeyframePose: return 6;
    case NodeKind::WallPlane: return 3;
    default: return 2;
  }
}

Factor make_odometry_factor(NodeId i, NodeId j, const Pose3& measurement, const Mat6& info) {
  Factor f;
  f.kind = FactorKind::Odometry;
  f.nodes = {i, j};
  f.measurement.resize(7);
  const auto& q = measurement.rotation;
  f.measurement << q.w(), q.x(), q.y(), q.z(), measurement.translation;
  f.information = info;
  return f;
}

Factor make_pose_plane_factor(NodeId keyframe, NodeId wall, const PlaneMinimal& measurement, const Mat3& info) {
  return {FactorKind::PosePlane, {keyframe, wall}, measurement.as_vector(), info};
}

Factor make_four_wall_room_factor(NodeId room, NodeId x_a, NodeId x_b, NodeId y_a, NodeId y_b,
                                  const Eigen::Matrix2d& info) {
  return {FactorKind::FourWallRoom, {room, x_a, x_b, y_a, y_b}, Eigen::VectorXd(0), info};
}

Factor make_two_wall_room_factor(NodeId room, NodeId a, NodeId b, const Vec2& cluster_center,
                                 const Eigen::Matrix2d& info) {
  return {FactorKind::TwoWallRoom, {room, a, b}, cluster_center, info};
}

Factor make_floor_room_factor(NodeId floor, NodeId room, const Vec2& delta, const Eigen::Matrix2d& info) {
  return {FactorKind::FloorRoom, {floor, room}, delta, info};
}

Factor make_duplicate_plane_factor(NodeId keep, NodeId merge, const Mat3& info) {
  return {FactorKind::DuplicatePlane, {keep, merge}, Eigen::VectorXd(0), info};
}

Pose3 odometry_measurement(const Factor& f) {
  const auto& m = f.measurement;
  return Pose3::from_rotation_translation(Eigen::Quaterniond(m(0), m(1), m(2), m(3)).normalized(),
                                          Vec3(m(4), m(5), m(6)));
}

Vec6 residual_odometry(const Pose3& x_i, const Pose3& x_j, const Pose3& meas, Mat6* J_i, Mat6* J_j) {
  const Pose3 rel = compose(inverse(x_i), x_j);
  const Pose3 err = compose(inverse(meas), rel);
  const Vec6 r = pose_log(err);
  if (J_i || J_j) {
    const Mat3 Rm_t = meas.rotation_matrix().transpose();
    const Mat3 Rij = rel.rotation_matrix();
    const Mat3 Jr_inv = so3_right_jacobian_inverse(r.head<3>());
    if (J_i) {
      J_i->setZero();
      J_i->block<3, 3>(0, 0) = -Jr_inv * Rij.transpose();
      J_i->block<3, 3>(3, 0) = Rm_t * skew(rel.translation);
      J_i->block<3, 3>(3, 3) = -Rm_t;
    }
    if (J_j) {
      J_j->setZero();
      J_j->block<3, 3>(0, 0) = Jr_inv;
      J_j->block<3, 3>(3, 3) = Rm_t * Rij;
    }
  }
  return r;
}

Vec3 residual_pose_plane(const Pose3& x, const PlaneMinimal& plane_map, const PlaneMinimal& meas_body, Mat36* J_x,
                         Mat3* J_plane) {
  const Plane pm = minimal_to_plane(plane_map);
  const Plane pb = transform_plane_to_body(x, pm);
  const PlaneMinimal mb = plane_to_minimal(pb);
  const Vec3 r(wrap_angle(mb.azimuth - meas_body.azimuth), mb.elevation - meas_body.elevation,
               mb.distance - meas_body.distance);
  if (J_x || J_plane) {
    // d(minimal)/d(n_b, d_b)
    const Vec3& n = pb.normal;
    const double rho2 = std::max(n.x() * n.x() + n.y() * n.y(), 1e-18);
    Eigen::Matrix<double, 3, 4> dm = Eigen::Matrix<double, 3, 4>::Zero();
    dm(0, 0) = -n.y() / rho2;
    dm(0, 1) = n.x() / rho2;
    dm(1, 2) = 1.0 / std::sqrt(rho2);
    dm(2, 3) = 1.0;
    if (J_x) {
      Eigen::Matrix<double, 4, 6> dnb = Eigen::Matrix<double, 4, 6>::Zero();
      dnb.block<3, 3>(0, 0) = skew(n);
      dnb.block<1, 3>(3, 3) = n.transpose();
      *J_x = dm * dnb;
    }
    if (J_plane) {
      const Mat3 Rt = x.rotation_matrix().transpose();
      const Vec3 dn_az = minimal_normal_d_azimuth(plane_map.azimuth, plane_map.elevation);
      const Vec3 dn_el = minimal_normal_d_elevation(plane_map.azimuth, plane_map.elevation);
      Eigen::Matrix<double, 4, 3> dp = Eigen::Matrix<double, 4, 3>::Zero();
      dp.block<3, 1>(0, 0) = Rt * dn_az;
      dp.block<3, 1>(0, 1) = Rt * dn_el;
      dp(3, 0) = dn_az.dot(x.translation);
      dp(3, 1) = dn_el.dot(x.translation);
      dp(3, 2) = 1.0;
      *J_plane = dm * dp;
    }
  }
  return r;
}

namespace {

// Closest point of the plane to the origin, -d n, and its 3x3 Jacobian.
Vec3 foot_point(const PlaneMinimal& p, Mat3* J) {
  const Vec3 n = minimal_normal(p.azimuth, p.elevation);
  if (J) {
    J->col(0) = -p.distance * minimal_normal_d_azimuth(p.azimuth, p.elevation);
    J->col(1) = -p.distance * minimal_normal_d_elevation(p.azimuth, p.elevation);
    J->col(2) = -n;
  }
  return -p.distance * n;
}

}  // namespace

// The canonicalized |d| n of a plane always equals -d n, so the room centre
// is the mean of the foot points of each wall pair. Writing it that way keeps
// the residual smooth when a state's d changes sign.
Vec2 residual_four_wall_room(const Vec2& room, const PlaneMinimal& x_a, const PlaneMinimal& x_b,
                             const PlaneMinimal& y_a, const PlaneMinimal& y_b, std::array<Mat23, 4>* J_walls) {
  std::array<Mat3, 4> J;
  const std::array<const PlaneMinimal*, 4> walls{&x_a, &x_b, &y_a, &y_b};
  Vec3 center = Vec3::Zero();
  for (int k = 0; k < 4; ++k) center += 0.5 * foot_point(*walls[k], J_walls ? &J[k] : nullptr);
  if (J_walls) {
    for (int k = 0; k < 4; ++k) (*J_walls)[k] = -0.5 * J[k].topRows<2>();
  }
  return room - center.head<2>();
}

Vec2 residual_two_wall_room(const Vec2& room, const PlaneMinimal& a, const PlaneMinimal& b, const Vec2& c,
                            Mat23* J_a, Mat23* J_b) {
  Mat3 Ja, Jb;
  const bool want = J_a || J_b;
  const Vec3 r = 0.5 * (foot_point(a, want ? &Ja : nullptr) + foot_point(b, want ? &Jb : nullptr));
  const double norm = r.norm();
  if (norm < 1e-12) {
    if (J_a) J_a->setZero();
    if (J_b) J_b->setZero();
    return room - c;
  }
  const Vec3 rh = r / norm;
  const Vec3 c3(c.x(), c.y(), 0.0);
  const Vec3 k = r + c3 - c3.dot(rh) * rh;
  if (want) {
    const Mat3 P = Mat3::Identity() - rh * rh.transpose();
    const Mat3 dk = Mat3::Identity() - (rh * c3.transpose() * P + c3.dot(rh) * P) / norm;
    if (J_a) *J_a = -(dk * 0.5 * Ja).topRows<2>();
    if (J_b) *J_b = -(dk * 0.5 * Jb).topRows<2>();
  }
  return room - k.head<2>();
}

Vec2 residual_floor_room(const Vec2& floor, const Vec2& room, const Vec2& delta) { return delta - (room - floor); }

Vec3 residual_duplicate_plane(const PlaneMinimal& p, const PlaneMinimal& q) {
  return {wrap_angle(p.azimuth - q.azimuth), p.elevation - q.elevation, p.distance - q.distance};
}

NodeId SituationalGraph::insert(NodeKind kind, std::variant<Pose3, PlaneMinimal, Vec2> state, bool fixed) {
  VariableNode n;
  n.id = next_id_;
  n.kind = kind;
  n.state = std::move(state);
  n.fixed = fixed;
  insert_node(n);
  return n.id;
}

NodeId SituationalGraph::add_keyframe(const Pose3& pose, bool fixed) {
  return insert(NodeKind::KeyframePose, pose, fixed);
}
NodeId SituationalGraph::add_wall(const PlaneMinimal& plane) {
  return insert(NodeKind::WallPlane, normalize_minimal(plane), false);
}
NodeId SituationalGraph::add_room(const Vec2& center, bool two_wall) {
  return insert(two_wall ? NodeKind::TwoWallRoom : NodeKind::Room, center, false);
}
NodeId SituationalGraph::add_floor(const Vec2& center) { return insert(NodeKind::Floor, center, false); }

void SituationalGraph::insert_node(const VariableNode& node) {
  if (nodes_.count(node.id)) throw std::invalid_argument("duplicate node id " + std::to_string(node.id));
  const bool ok = node.kind == NodeKind::KeyframePose ? std::holds_alternative<Pose3>(node.state)
                  : node.kind == NodeKind::WallPlane  ? std::holds_alternative<PlaneMinimal>(node.state)
                                                      : std::holds_alternative<Vec2>(node.state);
  if (!ok) throw std::invalid_argument("node " + std::to_string(node.id) + ": state does not match kind");
  nodes_.emplace(node.id, node);
  layers_[node.kind].insert(node.id);
  next_id_ = std::max(next_id_, node.id + 1);
}

const VariableNode& SituationalGraph::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw std::out_of_range("unknown node id " + std::to_string(id));
  return it->second;
}

VariableNode& SituationalGraph::node(NodeId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw std::out_of_range("unknown node id " + std::to_string(id));
  return it->second;
}

const std::set<NodeId>& SituationalGraph::layer(NodeKind kind) const {
  static const std::set<NodeId> empty;
  auto it = layers_.find(kind);
  return it == layers_.end() ? empty : it->second;
}

namespace {

bool room_kind(NodeKind k) { return k == NodeKind::Room || k == NodeKind::TwoWallRoom; }

}  // namespace

void SituationalGraph::add_factor(Factor factor) {
  const std::string name(to_string(factor.kind));
  std::vector<NodeKind> expected;
  Eigen::Index payload = 0;
  switch (factor.kind) {
    case FactorKind::Odometry:
      expected = {NodeKind::KeyframePose, NodeKind::KeyframePose};
      payload = 7;
      break;
    case FactorKind::PosePlane:
      expected = {NodeKind::KeyframePose, NodeKind::WallPlane};
      payload = 3;
      break;
    case FactorKind::FourWallRoom:
      expected = {NodeKind::Room, NodeKind::WallPlane, NodeKind::WallPlane, NodeKind::WallPlane,
                  NodeKind::WallPlane};
      break;
    case FactorKind::TwoWallRoom:
      expected = {NodeKind::TwoWallRoom, NodeKind::WallPlane, NodeKind::WallPlane};
      payload = 2;
      break;
    case FactorKind::FloorRoom:
      expected = {NodeKind::Floor, NodeKind::Room};
      payload = 2;
      break;
    case FactorKind::DuplicatePlane:
      expected = {NodeKind::WallPlane, NodeKind::WallPlane};
      break;
  }
  if (factor.nodes.size() != expected.size()) throw std::invalid_argument(name + " factor: wrong node count");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    auto it = nodes_.find(factor.nodes[i]);
    if (it == nodes_.end()) {
      throw std::invalid_argument(name + " factor: unknown node id " + std::to_string(factor.nodes[i]));
    }
    const NodeKind k = it->second.kind;
    const bool fits = (factor.kind == FactorKind::FloorRoom && i == 1) ? room_kind(k) : k == expected[i];
    if (!fits) throw std::invalid_argument(name + " factor: node " + std::to_string(factor.nodes[i]) + " is a " +
                                           std::string(to_string(k)));
  }
  if (factor.measurement.size() != payload) throw std::invalid_argument(name + " factor: wrong measurement size");
  const int dim = residual_dim(factor.kind);
  if (factor.information.rows() != dim || factor.information.cols() != dim) {
    throw std::invalid_argument(name + " factor: information must be " + std::to_string(dim) + "x" +
                                std::to_string(dim));
  }
  factors_.push_back(std::move(factor));
}

Linearization linearize(const SituationalGraph& g, const Factor& f) {
  Linearization lin;
  const auto& ids = f.nodes;
  switch (f.kind) {
    case FactorKind::Odometry: {
      Mat6 Ji, Jj;
      lin.residual = residual_odometry(g.node(ids[0]).pose(), g.node(ids[1]).pose(), odometry_measurement(f), &Ji, &Jj);
      lin.jacobians = {Ji, Jj};
      break;
    }
    case FactorKind::PosePlane: {
      Mat36 Jx;
      Mat3 Jp;
      lin.residual = residual_pose_plane(g.node(ids[0]).pose(), g.node(ids[1]).plane(),
                                         PlaneMinimal::from_vector(f.measurement), &Jx, &Jp);
      lin.jacobians = {Jx, Jp};
      break;
    }
    case FactorKind::FourWallRoom: {
      std::array<Mat23, 4> Jw;
      lin.residual = residual_four_wall_room(g.node(ids[0]).point(), g.node(ids[1]).plane(), g.node(ids[2]).plane(),
                                             g.node(ids[3]).plane(), g.node(ids[4]).plane(), &Jw);
      lin.jacobians = {Eigen::Matrix2d::Identity(), Jw[0], Jw[1], Jw[2], Jw[3]};
      break;
    }
    case FactorKind::TwoWallRoom: {
      Mat23 Ja, Jb;
      lin.residual = residual_two_wall_room(g.node(ids[0]).point(), g.node(ids[1]).plane(), g.node(ids[2]).plane(),
                                            f.measurement.head<2>(), &Ja, &Jb);
      lin.jacobians = {Eigen::Matrix2d::Identity(), Ja, Jb};
      break;
    }
    case FactorKind::FloorRoom:
      lin.residual = residual_floor_room(g.node(ids[0]).point(), g.node(ids[1]).point(), f.measurement.head<2>());
      lin.jacobians = {Eigen::Matrix2d::Identity(), -Eigen::Matrix2d::Identity()};
      break;
    case FactorKind::DuplicatePlane:
      lin.residual = residual_duplicate_plane(g.node(ids[0]).plane(), g.node(ids[1]).plane());
      lin.jacobians = {Mat3::Identity(), -Mat3::Identity()};
      break;
  }
  return lin;
}

Eigen::VectorXd factor_residual(const SituationalGraph& g, const Factor& f) {
  const auto& ids = f.nodes;
  switch (f.kind) {
    case FactorKind::Odometry:
      return residual_odometry(g.node(ids[0]).pose(), g.node(ids[1]).pose(), odometry_measurement(f));
    case FactorKind::PosePlane:
      return residual_pose_plane(g.node(ids[0]).pose(), g.node(ids[1]).plane(),
                                 PlaneMinimal::from_vector(f.measurement));
    case FactorKind::FourWallRoom:
      return residual_four_wall_room(g.node(ids[0]).point(), g.node(ids[1]).plane(), g.node(ids[2]).plane(),
                                     g.node(ids[3]).plane(), g.node(ids[4]).plane());
    case FactorKind::TwoWallRoom:
      return residual_two_wall_room(g.node(ids[0]).point(), g.node(ids[1]).plane(), g.node(ids[2]).plane(),
                                    f.measurement.head<2>());
    case FactorKind::FloorRoom:
      return residual_floor_room(g.node(ids[0]).point(), g.node(ids[1]).point(), f.measurement.head<2>());
    case FactorKind::DuplicatePlane:
      return residual_duplicate_plane(g.node(ids[0]).plane(), g.node(ids[1]).plane());
  }
  return {};
}

void apply_increment(VariableNode& node, const Eigen::VectorXd& delta) {
  if (delta.size() != node.tangent_dim()) throw std::invalid_argument("increment has the wrong dimension");
  switch (node.kind) {
    case NodeKind::KeyframePose:
      node.state = retract(node.pose(), delta.head<6>());
      break;
    case NodeKind::WallPlane: {
      const PlaneMinimal& p = node.plane();
      node.state = normalize_minimal({p.azimuth + delta(0), p.elevation + delta(1), p.distance + delta(2)});
      break;
    }
    default:
      node.state = Vec2(node.point() + delta.head<2>());
      break;
  }
}

double total_cost(const SituationalGraph& graph) {
  double cost = 0.0;
  for (const auto& f : graph.factors()) {
    const Eigen::VectorXd r = factor_residual(graph, f);
    cost += r.dot(f.information * r);
  }
  return cost;
}

Pose3 update_drift(SituationalGraph& graph, const Pose3& latest_odom_pose) {
  const auto& kfs = graph.layer(NodeKind::KeyframePose);
  if (kfs.empty()) throw std::logic_error("update_drift: graph has no keyframes");
  graph.drift = compose(graph.node(*kfs.rbegin()).pose(), inverse(latest_odom_pose));
  return graph.drift;
}

bool add_keyframe_if_due(const Pose3& last_keyframe, const Pose3& current_odom, const KeyframeGates& gates) {
  const Pose3 rel = compose(inverse(last_keyframe), current_odom);
  return rel.translation.norm() > gates.translation || rotation_angle(rel) > gates.rotation;
}

}  // namespace sgraphs
