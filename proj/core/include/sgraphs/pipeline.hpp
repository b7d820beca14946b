#pragma once

#include "sgraphs/config.hpp"
#include "sgraphs/evaluation.hpp"
#include "sgraphs/factor_graph.hpp"
#include "sgraphs/free_space.hpp"
#include "sgraphs/plane_extraction.hpp"
#include "sgraphs/room_segmentation.hpp"
#include "sgraphs/simulator.hpp"
#include "sgraphs/solver.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace sgraphs {

/// Odometry and body-frame clouds in timestamp order.
struct SensorLog {
  std::vector<double> timestamps;
  std::vector<Pose3> odometry;
  std::vector<std::vector<Vec3>> clouds;
};

SensorLog sensor_log(const SyntheticScene& scene);

struct KeyframeRecord {
  NodeId node = 0;
  double timestamp = 0.0;
  Pose3 odometry;
  std::size_t sample = 0;  // index into the sensor log
};

struct MappedFloor {
  NodeId node = 0;
  Vec2 center = Vec2::Zero();  // last segmented centre (the node state is in the graph)
  std::array<LandmarkId, 4> wall_ids{};
};

/// Points of one wall as seen from one keyframe, body frame.
struct WallObservation {
  NodeId keyframe = 0;
  LandmarkId wall = 0;
  std::vector<Vec3> points;
};

struct PipelineResult {
  SituationalGraph graph;
  std::vector<KeyframeRecord> keyframes;
  std::vector<PlaneLandmark> walls;  // id == wall node id
  std::vector<WallObservation> observations;
  std::vector<MappedRoom> rooms;     // id == room node id
  std::optional<MappedFloor> floor;
  std::vector<DuplicatePlanePair> duplicates;
  std::vector<SolverReport> solver_reports;
  std::vector<std::size_t> solver_factor_counts;  // graph size at each optimization
  TimingRecorder timing;
  std::vector<FreeSpaceCluster> last_clusters;    // map frame
};

/// Incremental front end and back end. Feed samples in timestamp order.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  /// Returns true when the sample was taken as a keyframe. Throws
  /// SolverError when an optimization cannot be posed.
  bool process(double timestamp, const Pose3& odometry, const std::vector<Vec3>& cloud_body);
  /// Runs a last optimization when keyframes were added since the previous one.
  void finish();

  const PipelineResult& result() const { return result_; }
  PipelineResult& result() { return result_; }
  const PipelineConfig& config() const { return config_; }

 private:
  void add_plane_observations(NodeId keyframe, const Pose3& x_init, const std::vector<Vec3>& cloud,
                              std::set<LandmarkId>& seen);
  std::vector<FreeSpaceCluster> free_space_clusters(const Pose3& odometry);
  void segment_rooms(const Pose3& odometry, const std::set<LandmarkId>& seen);
  void segment_floor_level();
  void add_room_factor(const MappedRoom& room, const RoomCandidate& candidate);
  void add_floor_room_factor(NodeId room);
  void run_backend();
  void refresh_walls();

  PipelineConfig config_;
  PipelineResult result_;
  std::size_t samples_seen_ = 0;
  std::size_t since_optimize_ = 0;
  std::set<std::pair<LandmarkId, LandmarkId>> duplicate_factors_;
  std::map<RoomId, std::pair<Vec2, int>> two_wall_centers_;  // sum and count of cluster centres
  std::vector<std::pair<Pose3, std::vector<Vec3>>> window_;  // odometry pose, column-deduplicated cloud
};

PipelineResult run_pipeline(const SensorLog& log, const PipelineConfig& config);

/// Keyframe poses as currently estimated / as reported by odometry.
Trajectory estimated_trajectory(const PipelineResult& result);
Trajectory odometry_trajectory(const PipelineResult& result);

/// Wall inlier points placed with the estimated keyframe poses, voxel-deduplicated.
std::vector<Vec3> map_cloud(const PipelineResult& result, double voxel = 0.05);

/// Rooms with their estimated centres.
std::vector<DetectedRoom> detected_rooms(const PipelineResult& result);

/// Layered scene graph (keyframes, walls, rooms, floors) and factor summaries.
/// Deterministic for identical results; carries no timing.
std::string scene_graph_json(const PipelineResult& result);

}  // namespace sgraphs
