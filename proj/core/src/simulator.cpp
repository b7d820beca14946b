#include "sgraphs/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace sgraphs {

namespace {

constexpr double kEps = 1e-9;

std::string at(const std::string& path, const std::string& what) { return path + ": " + what; }

bool on_room_side(const FloorplanSpec& fp, const Doorway& d) {
  for (const auto& r : fp.rooms) {
    if (d.axis == PlaneAxis::X) {
      const bool on_line = std::abs(d.coordinate - r.x_min) < kEps || std::abs(d.coordinate - r.x_max) < kEps;
      if (on_line && d.from >= r.y_min - kEps && d.to <= r.y_max + kEps) return true;
    } else {
      const bool on_line = std::abs(d.coordinate - r.y_min) < kEps || std::abs(d.coordinate - r.y_max) < kEps;
      if (on_line && d.from >= r.x_min - kEps && d.to <= r.x_max + kEps) return true;
    }
  }
  return false;
}

// Removes [gap_from, gap_to] from every interval.
std::vector<std::pair<double, double>> subtract(const std::vector<std::pair<double, double>>& in, double gap_from,
                                                double gap_to) {
  std::vector<std::pair<double, double>> out;
  for (const auto& [lo, hi] : in) {
    if (gap_to <= lo || gap_from >= hi) {
      out.emplace_back(lo, hi);
      continue;
    }
    if (gap_from - lo > 1e-6) out.emplace_back(lo, gap_from);
    if (hi - gap_to > 1e-6) out.emplace_back(gap_to, hi);
  }
  return out;
}

struct Side {
  PlaneAxis axis;
  double coordinate;
  double from, to;
  Vec2 normal;
};

std::vector<Side> room_sides(const RoomRect& r) {
  std::vector<Side> sides;
  const bool long_x = (r.x_max - r.x_min) >= (r.y_max - r.y_min);
  const bool keep_x_sides = !r.corridor || !long_x;
  const bool keep_y_sides = !r.corridor || long_x;
  if (keep_x_sides) {
    sides.push_back({PlaneAxis::X, r.x_min, r.y_min, r.y_max, Vec2(1, 0)});
    sides.push_back({PlaneAxis::X, r.x_max, r.y_min, r.y_max, Vec2(-1, 0)});
  }
  if (keep_y_sides) {
    sides.push_back({PlaneAxis::Y, r.y_min, r.x_min, r.x_max, Vec2(0, 1)});
    sides.push_back({PlaneAxis::Y, r.y_max, r.x_min, r.x_max, Vec2(0, -1)});
  }
  return sides;
}

std::vector<std::pair<double, double>> side_pieces(const FloorplanSpec& fp, const Side& s) {
  std::vector<std::pair<double, double>> pieces{{s.from, s.to}};
  for (const auto& d : fp.doorways) {
    if (d.axis == s.axis && std::abs(d.coordinate - s.coordinate) < kEps) pieces = subtract(pieces, d.from, d.to);
  }
  return pieces;
}

Plane side_plane(const Side& s) {
  const Vec3 n(s.normal.x(), s.normal.y(), 0.0);
  const double d = s.axis == PlaneAxis::X ? -s.normal.x() * s.coordinate : -s.normal.y() * s.coordinate;
  return Plane{n, d};
}

}  // namespace

void validate(const SceneSpec& spec) {
  const auto& fp = spec.floorplan;
  if (fp.rooms.empty()) throw std::invalid_argument(at("floorplan.rooms", "at least one room is required"));
  for (std::size_t i = 0; i < fp.rooms.size(); ++i) {
    const auto& r = fp.rooms[i];
    const std::string p = "floorplan.rooms[" + std::to_string(i) + "]";
    if (!(r.x_max > r.x_min)) throw std::invalid_argument(at(p + ".x_max", "must exceed x_min"));
    if (!(r.y_max > r.y_min)) throw std::invalid_argument(at(p + ".y_max", "must exceed y_min"));
  }
  for (std::size_t i = 0; i < fp.doorways.size(); ++i) {
    const auto& d = fp.doorways[i];
    const std::string p = "floorplan.doorways[" + std::to_string(i) + "]";
    if (d.axis == PlaneAxis::Horizontal) throw std::invalid_argument(at(p + ".axis", "must be x or y"));
    if (!(d.to > d.from)) throw std::invalid_argument(at(p + ".to", "must exceed from"));
    if (!on_room_side(fp, d)) throw std::invalid_argument(at(p, "does not lie on a room boundary"));
  }
  if (!(fp.wall_height > 0.0)) throw std::invalid_argument(at("floorplan.wall_height", "must be positive"));
  const auto& t = spec.trajectory;
  if (t.waypoints.size() < 2) throw std::invalid_argument(at("trajectory.waypoints", "need at least 2 waypoints"));
  if (t.laps < 1) throw std::invalid_argument(at("trajectory.laps", "must be >= 1"));
  if (!(t.speed > 0.0)) throw std::invalid_argument(at("trajectory.speed", "must be positive"));
  if (!(t.sample_rate > 0.0)) throw std::invalid_argument(at("trajectory.sample_rate", "must be positive"));
  const auto& n = spec.noise;
  if (n.odom_translation_sigma < 0.0)
    throw std::invalid_argument(at("noise.odom_translation_sigma", "must be >= 0"));
  if (n.odom_rotation_sigma < 0.0) throw std::invalid_argument(at("noise.odom_rotation_sigma", "must be >= 0"));
  if (n.point_sigma < 0.0) throw std::invalid_argument(at("noise.point_sigma", "must be >= 0"));
  const auto& s = spec.sensor;
  if (!(s.range > 0.0)) throw std::invalid_argument(at("sensor.range", "must be positive"));
  if (!(s.point_spacing > 0.0)) throw std::invalid_argument(at("sensor.point_spacing", "must be positive"));
  if (!(s.height_step > 0.0)) throw std::invalid_argument(at("sensor.height_step", "must be positive"));

  const auto walls = wall_segments(fp);
  const auto wps = expanded_waypoints(t);
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const Vec2& w = wps[i];
    const bool inside = std::any_of(fp.rooms.begin(), fp.rooms.end(), [&](const RoomRect& r) { return r.contains(w); });
    const std::size_t src = i < t.waypoints.size() ? i : 1 + (i - 1) % (t.waypoints.size() - 1);
    const std::string p = "trajectory.waypoints[" + std::to_string(src) + "]";
    if (!inside) throw std::invalid_argument(at(p, "outside free space"));
    if (i > 0 && !line_of_sight(wps[i - 1], w, walls)) {
      throw std::invalid_argument(at(p, "segment from the previous waypoint crosses a wall"));
    }
  }
}

std::vector<WallSegment> wall_segments(const FloorplanSpec& fp) {
  std::vector<WallSegment> out;
  for (std::size_t r = 0; r < fp.rooms.size(); ++r) {
    for (const auto& s : room_sides(fp.rooms[r])) {
      for (const auto& [lo, hi] : side_pieces(fp, s)) {
        out.push_back({s.axis, s.coordinate, lo, hi, s.normal, static_cast<int>(r)});
      }
    }
  }
  return out;
}

std::vector<TruthPlane> truth_planes(const FloorplanSpec& fp) {
  std::vector<TruthPlane> out;
  for (std::size_t r = 0; r < fp.rooms.size(); ++r) {
    for (const auto& s : room_sides(fp.rooms[r])) {
      if (side_pieces(fp, s).empty()) continue;
      const Plane pl = side_plane(s);
      out.push_back({static_cast<int>(r), pl, classify_plane(pl)});
    }
  }
  return out;
}

std::vector<TruthRoom> truth_rooms(const FloorplanSpec& fp, std::span<const TruthPlane> planes) {
  std::vector<TruthRoom> out;
  for (std::size_t r = 0; r < fp.rooms.size(); ++r) {
    std::array<int, 4> slot{-1, -1, -1, -1};
    for (std::size_t k = 0; k < planes.size(); ++k) {
      if (planes[k].room != static_cast<int>(r)) continue;
      const auto& c = planes[k].plane_class;
      const int idx = (c.axis == PlaneAxis::X ? 0 : 2) + (c.sign == PlaneSign::A ? 0 : 1);
      slot[idx] = static_cast<int>(k);
    }
    TruthRoom room;
    room.name = fp.rooms[r].name;
    room.center = fp.rooms[r].center();
    const bool x_pair = slot[0] >= 0 && slot[1] >= 0;
    const bool y_pair = slot[2] >= 0 && slot[3] >= 0;
    if (x_pair && y_pair) {
      room.kind = RoomKind::FourWall;
      room.plane_indices = {slot[0], slot[1], slot[2], slot[3]};
    } else if (x_pair) {
      room.kind = RoomKind::TwoWallX;
      room.plane_indices = {slot[0], slot[1]};
    } else if (y_pair) {
      room.kind = RoomKind::TwoWallY;
      room.plane_indices = {slot[2], slot[3]};
    } else {
      continue;
    }
    out.push_back(std::move(room));
  }
  return out;
}

Vec2 floorplan_center(const FloorplanSpec& fp) {
  double x0 = fp.rooms.front().x_min, x1 = fp.rooms.front().x_max;
  double y0 = fp.rooms.front().y_min, y1 = fp.rooms.front().y_max;
  for (const auto& r : fp.rooms) {
    x0 = std::min(x0, r.x_min);
    x1 = std::max(x1, r.x_max);
    y0 = std::min(y0, r.y_min);
    y1 = std::max(y1, r.y_max);
  }
  return {0.5 * (x0 + x1), 0.5 * (y0 + y1)};
}

OccupancyGrid rasterize_floorplan(const FloorplanSpec& fp, double resolution, double margin) {
  double x0 = fp.rooms.front().x_min, x1 = fp.rooms.front().x_max;
  double y0 = fp.rooms.front().y_min, y1 = fp.rooms.front().y_max;
  for (const auto& r : fp.rooms) {
    x0 = std::min(x0, r.x_min);
    x1 = std::max(x1, r.x_max);
    y0 = std::min(y0, r.y_min);
    y1 = std::max(y1, r.y_max);
  }
  const Vec2 origin(x0 - margin, y0 - margin);
  const int w = static_cast<int>(std::ceil((x1 - x0 + 2 * margin) / resolution));
  const int h = static_cast<int>(std::ceil((y1 - y0 + 2 * margin) / resolution));
  OccupancyGrid grid = OccupancyGrid::filled(origin, resolution, w, h, Cell::Unknown);
  const auto walls = wall_segments(fp);
  const double half = 0.5 * resolution + 1e-9;
  for (int iy = 0; iy < h; ++iy) {
    for (int ix = 0; ix < w; ++ix) {
      const Vec2 c = grid.cell_center(ix, iy);
      bool occupied = false;
      for (const auto& s : walls) {
        const double across = s.axis == PlaneAxis::X ? c.x() : c.y();
        const double along = s.axis == PlaneAxis::X ? c.y() : c.x();
        if (std::abs(across - s.coordinate) <= half && along >= s.from - half && along <= s.to + half) {
          occupied = true;
          break;
        }
      }
      if (occupied) {
        grid.at(ix, iy) = Cell::Occupied;
      } else if (std::any_of(fp.rooms.begin(), fp.rooms.end(), [&](const RoomRect& r) {
                   return c.x() >= r.x_min && c.x() <= r.x_max && c.y() >= r.y_min && c.y() <= r.y_max;
                 })) {
        grid.at(ix, iy) = Cell::Free;
      }
    }
  }
  return grid;
}

bool line_of_sight(const Vec2& a, const Vec2& b, std::span<const WallSegment> walls) {
  for (const auto& s : walls) {
    const int across = s.axis == PlaneAxis::X ? 0 : 1;
    const int along = 1 - across;
    const double da = b(across) - a(across);
    if (std::abs(da) < 1e-12) continue;
    const double t = (s.coordinate - a(across)) / da;
    if (t <= 1e-9 || t >= 1.0 - 1e-6) continue;
    const double u = a(along) + t * (b(along) - a(along));
    if (u >= s.from && u <= s.to) return false;
  }
  return true;
}

std::vector<Vec3> sensor_range_filter(std::span<const Vec3> points_map, const Pose3& pose, double range,
                                      std::span<const WallSegment> walls) {
  if (!(range > 0.0)) throw std::invalid_argument("sensor range must be positive");
  std::vector<Vec3> out;
  const Vec2 o = pose.translation.head<2>();
  for (const auto& p : points_map) {
    if ((p - pose.translation).norm() > range) continue;
    if (!line_of_sight(o, p.head<2>(), walls)) continue;
    out.push_back(p);
  }
  return out;
}

std::vector<Vec2> expanded_waypoints(const TrajectorySpec& traj) {
  std::vector<Vec2> out = traj.waypoints;
  for (int lap = 1; lap < traj.laps; ++lap) out.insert(out.end(), traj.waypoints.begin() + 1, traj.waypoints.end());
  return out;
}

std::vector<Pose3> interpolate_trajectory(const TrajectorySpec& traj, double z) {
  const auto w = expanded_waypoints(traj);
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < w.size(); ++i) cum.push_back(cum.back() + (w[i] - w[i - 1]).norm());
  const double total = cum.back();
  const double step = traj.speed / traj.sample_rate;
  std::vector<double> s_values;
  for (int k = 0;; ++k) {
    const double s = k * step;
    if (s > total - 1e-9) break;
    s_values.push_back(s);
  }
  s_values.push_back(total);

  std::vector<Pose3> poses;
  std::size_t seg = 0;
  for (double s : s_values) {
    while (seg + 2 < w.size() && s >= cum[seg + 1]) ++seg;
    // Skip zero-length segments for the heading.
    std::size_t hs = seg;
    while (hs + 2 < w.size() && (w[hs + 1] - w[hs]).norm() < 1e-12) ++hs;
    const Vec2 dir = (w[hs + 1] - w[hs]).normalized();
    const double len = cum[seg + 1] - cum[seg];
    const double f = len > 0.0 ? std::clamp((s - cum[seg]) / len, 0.0, 1.0) : 0.0;
    const Vec2 p = w[seg] + f * (w[seg + 1] - w[seg]);
    poses.push_back(Pose3::from_yaw(std::atan2(dir.y(), dir.x()), Vec3(p.x(), p.y(), z)));
  }
  return poses;
}

namespace {

struct FaceSample {
  Vec3 point;
  Vec2 normal;
};

std::vector<FaceSample> sample_faces(const FloorplanSpec& fp, std::span<const WallSegment> walls,
                                     const SensorSpec& sensor) {
  std::vector<FaceSample> out;
  const int rows = std::max(1, static_cast<int>(std::floor(fp.wall_height / sensor.height_step + 1e-9)));
  for (const auto& s : walls) {
    const double len = s.to - s.from;
    const int count = std::max(1, static_cast<int>(std::lround(len / sensor.point_spacing)));
    for (int k = 0; k < count; ++k) {
      const double along = s.from + (k + 0.5) * len / count;
      for (int j = 0; j < rows; ++j) {
        const double z = fp.floor_z + (j + 0.5) * sensor.height_step;
        const Vec3 p = s.axis == PlaneAxis::X ? Vec3(s.coordinate, along, z) : Vec3(along, s.coordinate, z);
        out.push_back({p, s.normal});
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Vec3> wall_surface_points(const FloorplanSpec& fp, const SensorSpec& sensor) {
  const auto walls = wall_segments(fp);
  std::vector<Vec3> out;
  for (const auto& f : sample_faces(fp, walls, sensor)) out.push_back(f.point);
  return out;
}

SyntheticScene generate_scene(const SceneSpec& spec) {
  validate(spec);
  SyntheticScene scene;
  scene.spec = spec;
  const auto& fp = spec.floorplan;
  scene.truth = interpolate_trajectory(spec.trajectory, fp.floor_z);
  const double step_time = 1.0 / spec.trajectory.sample_rate;
  for (std::size_t k = 0; k < scene.truth.size(); ++k) scene.timestamps.push_back(k * step_time);
  if (scene.truth.size() >= 2) {
    const double last_len = (scene.truth.back().translation - scene.truth[scene.truth.size() - 2].translation).norm();
    scene.timestamps.back() = scene.timestamps[scene.timestamps.size() - 2] + last_len / spec.trajectory.speed;
  }

  std::mt19937_64 rng(spec.noise.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const auto& noise = spec.noise;

  if (noise.odom_translation_sigma == 0.0 && noise.odom_rotation_sigma == 0.0) {
    scene.odometry = scene.truth;
  } else {
    scene.odometry.push_back(scene.truth.front());
    for (std::size_t k = 1; k < scene.truth.size(); ++k) {
      const Pose3 delta = compose(inverse(scene.truth[k - 1]), scene.truth[k]);
      const double nx = noise.odom_translation_sigma * unit(rng);
      const double ny = noise.odom_translation_sigma * unit(rng);
      const double nyaw = noise.odom_rotation_sigma * unit(rng);
      const Pose3 err = Pose3::from_yaw(nyaw, Vec3(nx, ny, 0.0));
      scene.odometry.push_back(compose(compose(scene.odometry.back(), delta), err));
    }
  }

  const auto walls = wall_segments(fp);
  const auto faces = sample_faces(fp, walls, spec.sensor);
  scene.clouds.reserve(scene.truth.size());
  for (const auto& pose : scene.truth) {
    const Vec2 o = pose.translation.head<2>();
    const Mat3 Rt = pose.rotation_matrix().transpose();
    std::vector<Vec3> cloud;
    // Visibility is decided per wall column; all heights of a column share it.
    bool column_visible = false;
    Vec2 last_column(std::nan(""), std::nan(""));
    for (const auto& f : faces) {
      const Vec2 q = f.point.head<2>();
      if (f.normal.dot(o - q) <= 0.0) continue;
      if (!(q == last_column)) {
        last_column = q;
        column_visible = line_of_sight(o, q, walls);
      }
      if (!column_visible) continue;
      if ((f.point - pose.translation).norm() > spec.sensor.range) continue;
      Vec3 p = f.point;
      if (noise.point_sigma > 0.0) {
        p += noise.point_sigma * Vec3(unit(rng), unit(rng), unit(rng));
      }
      cloud.push_back(Rt * (p - pose.translation));
    }
    scene.clouds.push_back(std::move(cloud));
  }

  scene.grid = rasterize_floorplan(fp);
  scene.truth_planes = truth_planes(fp);
  scene.truth_rooms = truth_rooms(fp, scene.truth_planes);
  scene.floor_center = floorplan_center(fp);
  return scene;
}

SituationalGraph ground_truth_graph(const SyntheticScene& scene, int keyframe_stride) {
  if (keyframe_stride < 1) throw std::invalid_argument("keyframe stride must be >= 1");
  SituationalGraph g;
  const auto& fp = scene.spec.floorplan;
  const Mat6 odom_info = Mat6::Identity() * 1e4;
  const Mat3 plane_info = Mat3::Identity() * 1e4;
  const Eigen::Matrix2d room_info = Eigen::Matrix2d::Identity() * 100.0;

  std::vector<NodeId> wall_nodes;
  for (const auto& tp : scene.truth_planes) wall_nodes.push_back(g.add_wall(plane_to_minimal(tp.plane)));

  std::vector<std::size_t> kf_index;
  for (std::size_t k = 0; k < scene.truth.size(); k += keyframe_stride) kf_index.push_back(k);
  if (kf_index.back() != scene.truth.size() - 1) kf_index.push_back(scene.truth.size() - 1);

  NodeId prev = -1;
  std::size_t prev_k = 0;
  for (std::size_t k : kf_index) {
    const Pose3& pose = scene.truth[k];
    const NodeId id = g.add_keyframe(pose, prev < 0);
    if (prev >= 0) {
      g.add_factor(make_odometry_factor(prev, id, compose(inverse(scene.truth[prev_k]), pose), odom_info));
    }
    const Vec2 xy = pose.translation.head<2>();
    for (std::size_t p = 0; p < scene.truth_planes.size(); ++p) {
      const auto& tp = scene.truth_planes[p];
      if (!fp.rooms[tp.room].contains(xy)) continue;
      const PlaneMinimal meas = plane_to_minimal(transform_plane_to_body(pose, tp.plane));
      g.add_factor(make_pose_plane_factor(id, wall_nodes[p], meas, plane_info));
    }
    prev = id;
    prev_k = k;
  }

  // Coincident planes on different room sides (e.g. a long shell wall).
  for (std::size_t a = 0; a < scene.truth_planes.size(); ++a) {
    for (std::size_t b = a + 1; b < scene.truth_planes.size(); ++b) {
      const Plane& pa = scene.truth_planes[a].plane;
      const Plane& pb = scene.truth_planes[b].plane;
      if ((pa.normal - pb.normal).norm() < 1e-12 && std::abs(pa.distance - pb.distance) < 1e-12) {
        g.add_factor(make_duplicate_plane_factor(wall_nodes[a], wall_nodes[b], plane_info));
      }
    }
  }

  const NodeId floor = g.add_floor(scene.floor_center);
  for (const auto& room : scene.truth_rooms) {
    const bool two = is_two_wall(room.kind);
    const NodeId rid = g.add_room(room.center, two);
    const auto& pi = room.plane_indices;
    if (two) {
      g.add_factor(make_two_wall_room_factor(rid, wall_nodes[pi[0]], wall_nodes[pi[1]], room.center, room_info));
    } else {
      g.add_factor(make_four_wall_room_factor(rid, wall_nodes[pi[0]], wall_nodes[pi[1]], wall_nodes[pi[2]],
                                              wall_nodes[pi[3]], room_info));
    }
    g.add_factor(make_floor_room_factor(floor, rid, room.center - scene.floor_center, room_info));
  }
  return g;
}

}  // namespace sgraphs
