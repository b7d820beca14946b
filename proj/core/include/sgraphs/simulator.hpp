#pragma once

#include "sgraphs/factor_graph.hpp"
#include "sgraphs/free_space.hpp"
#include "sgraphs/geometry.hpp"
#include "sgraphs/room_segmentation.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sgraphs {

struct RoomRect {
  std::string name;
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  bool corridor = false;  // open-ended, bounded by one wall pair

  Vec2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  bool contains(const Vec2& p) const { return p.x() > x_min && p.x() < x_max && p.y() > y_min && p.y() < y_max; }
};

/// Gap in every wall lying on the line {x = coordinate} (axis X) or
/// {y = coordinate} (axis Y), spanning [from, to] along that line.
struct Doorway {
  PlaneAxis axis = PlaneAxis::X;
  double coordinate = 0.0;
  double from = 0.0, to = 0.0;
};

struct FloorplanSpec {
  std::vector<RoomRect> rooms;
  std::vector<Doorway> doorways;
  double wall_height = 2.5;
  double floor_z = 0.0;
};

struct TrajectorySpec {
  std::vector<Vec2> waypoints;
  double speed = 1.0;        // m/s
  double sample_rate = 2.0;  // Hz
  int laps = 1;              // waypoints are traversed this many times
};

/// Waypoints with laps unrolled (each extra lap restarts from waypoint 1).
std::vector<Vec2> expanded_waypoints(const TrajectorySpec& traj);

struct NoiseSpec {
  double odom_translation_sigma = 0.0;  // m per step
  double odom_rotation_sigma = 0.0;     // rad per step (yaw)
  double point_sigma = 0.0;             // m
  std::uint64_t seed = 1;
};

struct SensorSpec {
  double range = 15.0;
  double point_spacing = 0.2;  // along walls, m
  double height_step = 0.25;   // m
};

struct SceneSpec {
  std::string name = "scene";
  FloorplanSpec floorplan;
  TrajectorySpec trajectory;
  NoiseSpec noise;
  SensorSpec sensor;
};

/// Axis-aligned wall segment with the unit normal facing the room it bounds.
struct WallSegment {
  PlaneAxis axis = PlaneAxis::X;  // X: lies on x = coordinate
  double coordinate = 0.0;
  double from = 0.0, to = 0.0;    // extent along the wall
  Vec2 normal = Vec2::UnitX();
  int room = 0;                   // index into FloorplanSpec::rooms
};

struct TruthPlane {
  int room = 0;
  Plane plane;  // normal facing into the room
  PlaneClass plane_class;
};

struct TruthRoom {
  std::string name;
  RoomKind kind = RoomKind::FourWall;
  Vec2 center = Vec2::Zero();
  std::vector<int> plane_indices;  // into SyntheticScene::truth_planes, (x_a, x_b, y_a, y_b) or (a, b)
};

struct SyntheticScene {
  SceneSpec spec;
  std::vector<double> timestamps;
  std::vector<Pose3> truth;
  std::vector<Pose3> odometry;
  std::vector<std::vector<Vec3>> clouds;  // body frame, one per sample
  OccupancyGrid grid;
  std::vector<TruthPlane> truth_planes;
  std::vector<TruthRoom> truth_rooms;
  Vec2 floor_center = Vec2::Zero();
};

/// Throws std::invalid_argument naming the offending field
/// (e.g. "floorplan.rooms[1].x_max: ...").
void validate(const SceneSpec& spec);

/// Wall pieces of every room side after removing doorway gaps. Corridor
/// short sides are left open.
std::vector<WallSegment> wall_segments(const FloorplanSpec& fp);

/// One plane per walled room side (normals facing into the room).
std::vector<TruthPlane> truth_planes(const FloorplanSpec& fp);
std::vector<TruthRoom> truth_rooms(const FloorplanSpec& fp, std::span<const TruthPlane> planes);
/// Midpoint of the floorplan's bounding box.
Vec2 floorplan_center(const FloorplanSpec& fp);

/// Free inside rooms, Occupied on walls (cells whose centre is within half a
/// cell of a wall piece), Unknown elsewhere.
OccupancyGrid rasterize_floorplan(const FloorplanSpec& fp, double resolution = 0.1, double margin = 0.5);

/// True when the open segment a-b crosses no wall piece.
bool line_of_sight(const Vec2& a, const Vec2& b, std::span<const WallSegment> walls);

/// Points within `range` of `pose` with unobstructed planar line of sight.
std::vector<Vec3> sensor_range_filter(std::span<const Vec3> points_map, const Pose3& pose, double range,
                                      std::span<const WallSegment> walls);

/// Tangent-following samples along the waypoint polyline; the final sample
/// sits on the last waypoint.
std::vector<Pose3> interpolate_trajectory(const TrajectorySpec& traj, double z);

/// Noise-free samples of every wall face on the sensor's lattice; the
/// reference map for map RMSE.
std::vector<Vec3> wall_surface_points(const FloorplanSpec& fp, const SensorSpec& sensor);

/// Deterministic for a fixed noise.seed. Throws std::invalid_argument on an
/// invalid spec or a trajectory leaving free space.
SyntheticScene generate_scene(const SceneSpec& spec);

/// Graph at the ground truth: keyframes every `keyframe_stride` samples,
/// exact odometry and pose-plane factors for every visible wall, one room
/// factor per room, a floor node with exact floor-room factors.
SituationalGraph ground_truth_graph(const SyntheticScene& scene, int keyframe_stride = 2);

}  // namespace sgraphs
