#pragma once

#include "sgraphs/geometry.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace sgraphs {

enum class Cell : std::uint8_t { Free, Occupied, Unknown };

/// Row-major 2-D grid; cell (ix, iy) covers
/// [origin + (ix, iy) * resolution, origin + (ix + 1, iy + 1) * resolution).
struct OccupancyGrid {
  Vec2 origin = Vec2::Zero();
  double resolution = 0.1;
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;

  static OccupancyGrid filled(const Vec2& origin, double resolution, int width, int height, Cell value);

  bool contains(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < width && iy < height; }
  Cell at(int ix, int iy) const { return cells[static_cast<std::size_t>(iy) * width + ix]; }
  Cell& at(int ix, int iy) { return cells[static_cast<std::size_t>(iy) * width + ix]; }
  Vec2 cell_center(int ix, int iy) const {
    return origin + Vec2((ix + 0.5) * resolution, (iy + 0.5) * resolution);
  }
  std::optional<Eigen::Vector2i> cell_of(const Vec2& p) const;
};

/// Throws std::invalid_argument when resolution <= 0 or the cell count does
/// not match width * height.
void validate(const OccupancyGrid& grid);

/// Per-cell Euclidean distance (m) to the nearest non-free cell centre.
/// Unknown cells count as obstacles.
struct DistanceField {
  static constexpr double kInfinity = std::numeric_limits<double>::max();

  Vec2 origin = Vec2::Zero();
  double resolution = 0.1;
  int width = 0;
  int height = 0;
  std::vector<double> distance;

  double at(int ix, int iy) const { return distance[static_cast<std::size_t>(iy) * width + ix]; }
  bool is_free(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < width && iy < height && at(ix, iy) > 0.0; }
  std::optional<Eigen::Vector2i> cell_of(const Vec2& p) const;
  /// Bilinear interpolation between cell centres; falls back to the nearest
  /// cell when a neighbour is outside the grid or at the infinity sentinel.
  double sample(const Vec2& p) const;
};

/// Exact Euclidean distance transform (separable squared-distance algorithm).
DistanceField build_distance_field(const OccupancyGrid& grid);

struct FreeSpaceVertex {
  Vec2 position = Vec2::Zero();
  double distance = 0.0;  // obstacle clearance, m
  bool visited = false;
  int cluster = 0;        // 0 = unassigned
};

struct FreeSpaceGraph {
  std::vector<FreeSpaceVertex> vertices;
  std::vector<std::vector<std::size_t>> adjacency;  // sorted, undirected

  std::size_t add_vertex(const FreeSpaceVertex& v);
  void add_edge(std::size_t a, std::size_t b);
  std::size_t edge_count() const;
  bool empty() const { return vertices.empty(); }
};

/// Lattice samples (pitch `vertex_spacing`) of free cells within `t_r` of the
/// robot, joined by 8-neighbour edges whose segment stays in free space. Only
/// the component reachable from the vertex nearest the robot is kept.
FreeSpaceGraph build_free_space_graph(const DistanceField& field, const Vec2& robot_position, double t_r,
                                      double vertex_spacing);

struct FreeSpaceCluster {
  int cluster_id = 0;
  std::vector<std::size_t> vertex_ids;
  std::vector<Vec2> positions;
  // Endpoints: coordinate-wise extremes of the member vertices.
  double x_max = 0.0, x_min = 0.0, y_max = 0.0, y_min = 0.0;

  /// Cluster centre from the endpoints: c = (p1 - p2) / 2 + p2 per axis.
  Vec2 center() const;
};

/// Free-space clustering:
///  1. vertices with clearance < t_lambda are set aside together with their edges;
///  2. connected components of the remaining graph get ids 1..N;
///  3. each set-aside vertex joins the cluster of its first (lowest id) kept
///     neighbour in the original graph; orphans stay unassigned.
/// Vertex `visited`/`cluster` fields of `graph` are updated in place.
std::vector<FreeSpaceCluster> cluster_free_space(FreeSpaceGraph& graph, double t_lambda);

/// Rigidly moves the graph by the planar part (yaw, x, y) of `drift`.
/// Clearances are rigid-motion invariant and are carried over unchanged.
FreeSpaceGraph apply_drift_correction(const FreeSpaceGraph& graph, const Pose3& drift);

/// Ray-casts a body-frame scan taken at `pose` into the grid: cells along each
/// ray become Free (never overriding Occupied) and end cells become Occupied.
/// Points outside [z_min, z_max] (map frame) are ignored.
void integrate_scan(OccupancyGrid& grid, const Pose3& pose, std::span<const Vec3> points_body, double z_min,
                    double z_max);

}  // namespace sgraphs
