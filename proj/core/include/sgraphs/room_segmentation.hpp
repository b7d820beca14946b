#pragma once

#include "sgraphs/free_space.hpp"
#include "sgraphs/geometry.hpp"
#include "sgraphs/plane_extraction.hpp"

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sgraphs {

using RoomId = int;

enum class RoomKind { FourWall, TwoWallX, TwoWallY };

std::string_view to_string(RoomKind kind);
bool is_two_wall(RoomKind kind);

struct RoomCandidate {
  RoomKind kind = RoomKind::FourWall;
  Vec2 center = Vec2::Zero();
  /// (x_a, x_b, y_a, y_b) for four-wall rooms, (a, b) for two-wall rooms.
  std::vector<LandmarkId> wall_ids;
  Vec2 cluster_center = Vec2::Zero();  // two-wall kinds only
  int source_cluster = 0;
};

struct FloorCandidate {
  int floor_id = 0;
  Vec2 center = Vec2::Zero();
  std::array<LandmarkId, 4> bounding_wall_ids{};  // (x_a, x_b, y_a, y_b)
};

struct DuplicatePlanePair {
  LandmarkId keep_id = 0;
  LandmarkId merge_id = 0;

  bool operator==(const DuplicatePlanePair&) const = default;
};

/// Width vector between two parallel walls: both planes are canonicalized away
/// from the origin, ordered so |d_a| >= |d_b|, and w = |d_a| n_a - |d_b| n_b.
/// Throws std::invalid_argument when the planes are on different axes.
Vec3 room_width(const Plane& a, const Plane& b);

/// Midpoint of a wall pair: 1/2 (|d_a| n_a - |d_b| n_b) + |d_b| n_b, on canonicalized planes.
Vec3 wall_pair_midpoint(const Plane& a, const Plane& b);

/// Four-wall room centre (x, y). nullopt when either width is below t_w.
std::optional<Vec2> four_wall_room_center(const Plane& x_a, const Plane& x_b, const Plane& y_a, const Plane& y_b,
                                          double t_w = 0.5);

/// Two-wall room centre: the wall-axis coordinate comes from the wall pair,
/// the orthogonal one from the cluster centre. Falls back to the cluster
/// centre when the wall midpoint is the origin.
Vec2 two_wall_room_center(const Plane& a, const Plane& b, const Vec2& cluster_center);

struct RoomExtractionParams {
  double proximity = 1.0;          // wall point to cluster vertex, m
  double t_w = 0.5;                // minimum width, m
  double enclosure_overlap = 0.8;  // fraction of the opposing span a wall must cover
  double two_wall_min_aspect = 1.0;  // cluster extent along the walls over the wall spacing
};

/// Per cluster: pick the nearest wall for each (axis, sign) slot among walls
/// that face the cluster, then emit a four-wall room (all slots, widths and
/// enclosure pass) or a two-wall room (exactly one axis passes). A wall
/// encloses when its points (each covering +-0.25 m) cover the opposing span.
/// A two-wall room also needs a corridor-shaped cluster (two_wall_min_aspect).
std::vector<RoomCandidate> extract_rooms(std::span<const FreeSpaceCluster> clusters,
                                         std::span<const PlaneLandmark> landmarks,
                                         const RoomExtractionParams& params);

struct MappedRoom {
  RoomId room_id = 0;
  RoomKind kind = RoomKind::FourWall;
  Vec2 center = Vec2::Zero();
  std::vector<LandmarkId> wall_ids;
};

struct RoomAssociationParams {
  double room_gate = 1.0;         // m
  double plane_gate_m = 1.0;      // room-level wall check, m-equivalent (looser than plane matching)
  Mat3 plane_covariance = Eigen::Vector3d(0.01, 0.01, 0.0225).asDiagonal();
  double point_gate = 0.5;        // two-wall planar-point check, m

  double plane_mahalanobis_gate() const;
};

struct RoomAssociation {
  enum class Kind { Matched, MatchedWithDuplicates, New };
  Kind kind = Kind::New;
  RoomId room_id = 0;
  std::vector<DuplicatePlanePair> duplicates;
};

RoomAssociation associate_room(const RoomCandidate& candidate, std::span<const MappedRoom> rooms,
                               std::span<const PlaneLandmark> landmarks, const RoomAssociationParams& params);

enum class FloorDotGate {
  AntiParallel,  // pass when n_a . n_b <= -t_n (sensor-facing normals)
  Literal,       // pass when |n_a . n_b| < t_n
};

struct FloorParams {
  double t_n = 0.9;
  FloorDotGate gate = FloorDotGate::AntiParallel;
  double level_height = 3.0;  // z band per floor level, m
};

bool floor_dot_check(const Plane& a, const Plane& b, const FloorParams& params);

/// Widest (x_a, x_b) and (y_a, y_b) pairs passing the dot-product check;
/// centre by the four-wall formula. nullopt when an axis lacks a valid pair.
std::optional<FloorCandidate> segment_floor(std::span<const PlaneLandmark> landmarks, const FloorParams& params);

bool floor_update_needed(const Vec2& old_center, const Vec2& new_center, double t_f);

int floor_level(double z, double level_height);

}  // namespace sgraphs
