#pragma once

#include "sgraphs/geometry.hpp"

#include <cmath>
#include <random>

namespace sgraphs::test {

inline Pose3 random_pose(std::mt19937_64& rng, double t_scale = 5.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return {q, t_scale * Vec3(n(rng), n(rng), n(rng))};
}

inline Pose3 random_planar_pose(std::mt19937_64& rng, double t_scale = 5.0) {
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  std::normal_distribution<double> n(0.0, 1.0);
  return Pose3::from_yaw(yaw(rng), Vec3(t_scale * n(rng), t_scale * n(rng), 0.0));
}

inline Mat4 homogeneous(const Pose3& p) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = Eigen::Matrix3d(p.rotation);
  m.topRightCorner<3, 1>() = p.translation;
  return m;
}

inline Plane axis_plane(char axis, double coordinate, double sign) {
  // Plane {axis = coordinate} whose normal points along `sign` * axis.
  const Vec3 n = axis == 'x' ? Vec3(sign, 0, 0) : axis == 'y' ? Vec3(0, sign, 0) : Vec3(0, 0, sign);
  return {n, -sign * coordinate};
}

}  // namespace sgraphs::test

#include "sgraphs/free_space.hpp"

#include <algorithm>
#include <numeric>

namespace sgraphs::test {

struct Rect {
  double x0, y0, x1, y1;
  bool contains(const Vec2& p, double inset = 0.0) const {
    return p.x() > x0 + inset && p.x() < x1 - inset && p.y() > y0 + inset && p.y() < y1 - inset;
  }
};

// Rooms are free rectangles separated by walls of `wall` thickness centred on
// the room boundaries; doors are free rectangles cut through those walls.
inline OccupancyGrid plan_grid(const std::vector<Rect>& rooms, const std::vector<Rect>& doors, double res = 0.1,
                               double wall = 0.2) {
  double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
  for (const auto& r : rooms) {
    x0 = std::min(x0, r.x0), y0 = std::min(y0, r.y0);
    x1 = std::max(x1, r.x1), y1 = std::max(y1, r.y1);
  }
  const Vec2 origin(x0 - 1.0, y0 - 1.0);
  const int w = static_cast<int>(std::ceil((x1 - x0 + 2.0) / res));
  const int h = static_cast<int>(std::ceil((y1 - y0 + 2.0) / res));
  OccupancyGrid g = OccupancyGrid::filled(origin, res, w, h, Cell::Occupied);
  for (int iy = 0; iy < h; ++iy)
    for (int ix = 0; ix < w; ++ix) {
      const Vec2 c = g.cell_center(ix, iy);
      bool free = false;
      for (const auto& r : rooms) free = free || r.contains(c, wall / 2);
      for (const auto& d : doors) free = free || d.contains(c);
      if (free) g.at(ix, iy) = Cell::Free;
    }
  return g;
}

// Two-phase clustering written out with a union-find. Labels are 1..N in
// order of each component's lowest vertex index; 0 = unassigned.
inline std::vector<int> two_phase_labels(const FreeSpaceGraph& g, double t_lambda) {
  const std::size_t n = g.vertices.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  auto kept = [&](std::size_t i) { return g.vertices[i].distance >= t_lambda; };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : g.adjacency[i])
      if (kept(i) && kept(j)) parent[find(i)] = find(j);
  std::vector<int> root_label(n, 0), label(n, 0);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!kept(i)) continue;
    auto& l = root_label[find(i)];
    if (l == 0) l = ++next;
    label[i] = l;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (kept(i)) continue;
    std::vector<std::size_t> nb(g.adjacency[i]);
    std::sort(nb.begin(), nb.end());
    for (std::size_t j : nb)
      if (kept(j)) {
        label[i] = label[j];
        break;
      }
  }
  return label;
}

// Random rectilinear plan: cols x rows rooms, a door in every shared wall.
inline void random_plan(std::mt19937_64& rng, int cols, int rows, std::vector<Rect>& rooms,
                        std::vector<Rect>& doors) {
  std::uniform_real_distribution<double> size(3.5, 6.5), door_w(0.8, 1.2), frac(0.25, 0.75);
  std::vector<double> xs{0.0}, ys{0.0};
  for (int i = 0; i < cols; ++i) xs.push_back(xs.back() + size(rng));
  for (int j = 0; j < rows; ++j) ys.push_back(ys.back() + size(rng));
  rooms.clear();
  doors.clear();
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i) rooms.push_back({xs[i], ys[j], xs[i + 1], ys[j + 1]});
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i + 1 < cols; ++i) {
      const double w = door_w(rng), c = ys[j] + frac(rng) * (ys[j + 1] - ys[j]);
      doors.push_back({xs[i + 1] - 0.3, c - w / 2, xs[i + 1] + 0.3, c + w / 2});
    }
  for (int j = 0; j + 1 < rows; ++j)
    for (int i = 0; i < cols; ++i) {
      const double w = door_w(rng), c = xs[i] + frac(rng) * (xs[i + 1] - xs[i]);
      doors.push_back({c - w / 2, ys[j + 1] - 0.3, c + w / 2, ys[j + 1] + 0.3});
    }
}

}  // namespace sgraphs::test

#include "sgraphs/room_segmentation.hpp"

namespace sgraphs::test {

// Vertical wall {axis = coord} seen from the side `sign` points to, with
// points every 0.1 m from `from` to `to` along the other axis at z = 1.
inline PlaneLandmark wall_landmark(LandmarkId id, char axis, double coord, double sign, double from, double to,
                                   double step = 0.1) {
  PlaneLandmark lm;
  lm.id = id;
  const Plane p = axis_plane(axis, coord, sign);
  lm.plane_map = plane_to_minimal(p);
  lm.plane_class = classify_plane(p);
  for (double s = from; s <= to + 1e-9; s += step)
    lm.points_map.push_back(axis == 'x' ? Vec3(coord, s, 1.0) : Vec3(s, coord, 1.0));
  return lm;
}

inline FreeSpaceCluster box_cluster(int id, const Rect& r, double spacing = 0.2) {
  FreeSpaceCluster c;
  c.cluster_id = id;
  c.x_min = c.y_min = 1e9;
  c.x_max = c.y_max = -1e9;
  std::size_t k = 0;
  for (double x = r.x0; x <= r.x1 + 1e-9; x += spacing)
    for (double y = r.y0; y <= r.y1 + 1e-9; y += spacing) {
      c.vertex_ids.push_back(k++);
      c.positions.emplace_back(x, y);
      c.x_min = std::min(c.x_min, x), c.x_max = std::max(c.x_max, x);
      c.y_min = std::min(c.y_min, y), c.y_max = std::max(c.y_max, y);
    }
  return c;
}

// Four walls of the box facing inwards, ids first..first+3 as (x_a, x_b, y_a, y_b).
inline std::vector<PlaneLandmark> box_walls(LandmarkId first, const Rect& r) {
  return {wall_landmark(first, 'x', r.x0, 1.0, r.y0, r.y1), wall_landmark(first + 1, 'x', r.x1, -1.0, r.y0, r.y1),
          wall_landmark(first + 2, 'y', r.y0, 1.0, r.x0, r.x1), wall_landmark(first + 3, 'y', r.y1, -1.0, r.x0, r.x1)};
}

}  // namespace sgraphs::test

#include "sgraphs/factor_graph.hpp"

namespace sgraphs::test {

// Largest |J_fd - J| over all blocks, relative to max(1, |J|) per block.
inline double jacobian_error(const SituationalGraph& graph, const Factor& f, double h = 1e-6) {
  const Linearization lin = linearize(graph, f);
  double worst = 0.0;
  for (std::size_t k = 0; k < f.nodes.size(); ++k) {
    const int dim = graph.node(f.nodes[k]).tangent_dim();
    Eigen::MatrixXd fd(lin.residual.size(), dim);
    for (int c = 0; c < dim; ++c) {
      SituationalGraph plus = graph, minus = graph;
      Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
      e(c) = h;
      apply_increment(plus.node(f.nodes[k]), e);
      apply_increment(minus.node(f.nodes[k]), -e);
      fd.col(c) = (factor_residual(plus, f) - factor_residual(minus, f)) / (2 * h);
    }
    const Eigen::MatrixXd& J = lin.jacobians[k];
    const double scale = std::max(1.0, J.cwiseAbs().maxCoeff());
    worst = std::max(worst, (fd - J).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

// Random graph holding one factor of the given kind, states near a
// consistent configuration so the wrapped residuals stay continuous.
inline std::pair<SituationalGraph, Factor> random_factor(FactorKind kind, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0), far(1.0, 6.0);
  SituationalGraph g;
  auto wall = [&](char axis, double sign) {
    const double c = sign * far(rng) + 0.3 * u(rng);
    Plane p = axis_plane(axis, c, sign);
    PlaneMinimal m = plane_to_minimal(p);
    m.azimuth += 0.1 * u(rng);
    m.elevation += 0.1 * u(rng);
    return g.add_wall(normalize_minimal(m));
  };
  auto noise3 = [&](double s) { return Vec3(s * n(rng), s * n(rng), s * n(rng)); };
  const Eigen::Matrix2d I2 = Eigen::Matrix2d::Identity();
  switch (kind) {
    case FactorKind::Odometry: {
      const NodeId a = g.add_keyframe(random_pose(rng)), b = g.add_keyframe(random_pose(rng));
      const Pose3 meas = retract(compose(inverse(g.node(a).pose()), g.node(b).pose()),
                                 (Vec6() << noise3(0.1), noise3(0.3)).finished());
      Factor f = make_odometry_factor(a, b, meas, Mat6::Identity());
      return {g, f};
    }
    case FactorKind::PosePlane: {
      const NodeId x = g.add_keyframe(random_pose(rng, 2.0));
      const NodeId w = wall(u(rng) > 0 ? 'x' : 'y', u(rng) > 0 ? 1.0 : -1.0);
      const Plane body = transform_plane_to_body(g.node(x).pose(), minimal_to_plane(g.node(w).plane()));
      PlaneMinimal m = plane_to_minimal(body);
      const Vec3 d = noise3(0.05);
      m = normalize_minimal({m.azimuth + d.x(), m.elevation + d.y(), m.distance + d.z()});
      return {g, make_pose_plane_factor(x, w, m, Mat3::Identity())};
    }
    case FactorKind::FourWallRoom: {
      const NodeId r = g.add_room(Vec2(n(rng), n(rng)));
      const NodeId xa = wall('x', -1), xb = wall('x', 1), ya = wall('y', -1), yb = wall('y', 1);
      return {g, make_four_wall_room_factor(r, xa, xb, ya, yb, I2)};
    }
    case FactorKind::TwoWallRoom: {
      const NodeId r = g.add_room(Vec2(n(rng), n(rng)), true);
      const char axis = u(rng) > 0 ? 'x' : 'y';
      const NodeId a = wall(axis, -1), b = wall(axis, 1);
      return {g, make_two_wall_room_factor(r, a, b, Vec2(3 * n(rng), 3 * n(rng)), I2)};
    }
    case FactorKind::FloorRoom: {
      const NodeId fl = g.add_floor(Vec2(n(rng), n(rng)));
      const NodeId r = g.add_room(Vec2(n(rng), n(rng)));
      return {g, make_floor_room_factor(fl, r, Vec2(n(rng), n(rng)), I2)};
    }
    case FactorKind::DuplicatePlane: {
      const NodeId p = wall('x', 1);
      PlaneMinimal m = g.node(p).plane();
      const Vec3 d = noise3(0.05);
      const NodeId q = g.add_wall(normalize_minimal({m.azimuth + d.x(), m.elevation + d.y(), m.distance + d.z()}));
      return {g, make_duplicate_plane_factor(p, q, Mat3::Identity())};
    }
  }
  throw std::logic_error("unknown factor kind");
}

inline const std::vector<FactorKind>& all_factor_kinds() {
  static const std::vector<FactorKind> k{FactorKind::Odometry,    FactorKind::PosePlane, FactorKind::FourWallRoom,
                                         FactorKind::TwoWallRoom, FactorKind::FloorRoom, FactorKind::DuplicatePlane};
  return k;
}

}  // namespace sgraphs::test
