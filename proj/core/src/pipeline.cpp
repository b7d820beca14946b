#include "sgraphs/pipeline.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace sgraphs {

using nlohmann::json;

SensorLog sensor_log(const SyntheticScene& scene) { return {scene.timestamps, scene.odometry, scene.clouds}; }

namespace {

class StageTimer {
 public:
  StageTimer(TimingRecorder& rec, std::string stage)
      : rec_(rec), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const auto dt = std::chrono::steady_clock::now() - start_;
    rec_.add(stage_, std::chrono::duration<double, std::milli>(dt).count());
  }

 private:
  TimingRecorder& rec_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

using CellKey = std::pair<long, long>;

CellKey cell2(const Vec3& p, double size) {
  return {static_cast<long>(std::floor(p.x() / size)), static_cast<long>(std::floor(p.y() / size))};
}

// One point per planar cell, first come first kept.
std::vector<Vec3> dedupe_columns(const std::vector<Vec3>& points, double size) {
  std::set<CellKey> seen;
  std::vector<Vec3> out;
  for (const auto& p : points) {
    if (seen.insert(cell2(p, size)).second) out.push_back(p);
  }
  return out;
}

Eigen::Matrix2d isotropic_info(double sigma) { return Eigen::Matrix2d::Identity() / (sigma * sigma); }

PlaneLandmark* find_wall(std::vector<PlaneLandmark>& walls, LandmarkId id) {
  for (auto& w : walls) {
    if (w.id == id) return &w;
  }
  return nullptr;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) { validate(config_); }

bool Pipeline::process(double timestamp, const Pose3& odometry, const std::vector<Vec3>& cloud_body) {
  const std::size_t sample = samples_seen_++;
  auto& r = result_;
  if (!r.keyframes.empty() && !add_keyframe_if_due(r.keyframes.back().odometry, odometry, config_.keyframe_gates())) {
    return false;
  }

  const Pose3 x_init = compose(r.graph.drift, odometry);
  const bool first = r.keyframes.empty();
  const NodeId kf = r.graph.add_keyframe(x_init, first);
  if (!first) {
    const auto& prev = r.keyframes.back();
    const Pose3 meas = compose(inverse(prev.odometry), odometry);
    const double st = config_.noise_model.odom_translation_sigma;
    const double sr = deg2rad(config_.noise_model.odom_rotation_sigma_deg);
    Vec6 diag;
    diag << 1 / (sr * sr), 1 / (sr * sr), 1 / (sr * sr), 1 / (st * st), 1 / (st * st), 1 / (st * st);
    r.graph.add_factor(make_odometry_factor(prev.node, kf, meas, diag.asDiagonal()));
  }
  r.keyframes.push_back({kf, timestamp, odometry, sample});

  std::set<LandmarkId> seen;
  {
    StageTimer t(r.timing, "plane_segmentation");
    add_plane_observations(kf, x_init, cloud_body, seen);
  }

  const auto& fs = config_.free_space;
  std::vector<Vec3> band;
  for (const auto& p : cloud_body) {
    const double z = odometry.transform_point(p).z();
    if (z >= fs.z_min && z <= fs.z_max) band.push_back(p);
  }
  window_.emplace_back(odometry, dedupe_columns(band, fs.resolution));
  if (window_.size() > static_cast<std::size_t>(fs.window_keyframes)) window_.erase(window_.begin());

  {
    StageTimer t(r.timing, "room_segmentation");
    segment_rooms(odometry, seen);
  }
  {
    StageTimer t(r.timing, "floor_segmentation");
    segment_floor_level();
  }

  if (++since_optimize_ >= static_cast<std::size_t>(config_.solver.optimize_every)) run_backend();
  return true;
}

void Pipeline::finish() {
  if (since_optimize_ > 0) run_backend();
}

void Pipeline::add_plane_observations(NodeId keyframe, const Pose3& x_init, const std::vector<Vec3>& cloud,
                                      std::set<LandmarkId>& seen) {
  auto& r = result_;
  const auto assoc = config_.plane_association_params();
  const auto& nm = config_.noise_model;
  const Vec3 floor_var(nm.plane_sigma_azimuth * nm.plane_sigma_azimuth,
                       nm.plane_sigma_elevation * nm.plane_sigma_elevation,
                       nm.plane_sigma_distance * nm.plane_sigma_distance);

  for (const auto& obs : extract_planes({keyframe, cloud}, config_.ransac)) {
    const Plane plane_map = observation_to_map(obs, x_init);
    const PlaneClass cls = classify_plane(plane_map);
    if (!cls.is_wall()) continue;

    LandmarkId id;
    if (const auto match = associate_plane(plane_map, assoc.default_covariance, r.walls, assoc)) {
      id = match->landmark_id;
    } else {
      id = r.graph.add_wall(plane_to_minimal(plane_map));
      PlaneLandmark lm;
      lm.id = id;
      lm.plane_map = plane_to_minimal(plane_map);
      lm.plane_class = cls;
      r.walls.push_back(std::move(lm));
    }
    const Mat3 cov = obs.covariance + Mat3(floor_var.asDiagonal());
    r.graph.add_factor(make_pose_plane_factor(keyframe, id, plane_to_minimal(obs.plane_body), cov.inverse()));

    WallObservation wo;
    wo.keyframe = keyframe;
    wo.wall = id;
    wo.points.reserve(obs.inliers.size());
    for (const auto i : obs.inliers) wo.points.push_back(cloud[i]);
    PlaneLandmark& lm = *find_wall(r.walls, id);
    lm.observing_keyframes.insert(keyframe);
    // Until the next refresh, new footprint points are placed with the initial guess.
    std::set<CellKey> cells;
    for (const auto& p : lm.points_map) cells.insert(cell2(p, config_.landmark_voxel));
    for (const auto& p : wo.points) {
      const Vec3 q = x_init.transform_point(p);
      if (cells.insert(cell2(q, config_.landmark_voxel)).second) lm.points_map.push_back(q);
    }
    r.observations.push_back(std::move(wo));
    seen.insert(id);
  }
}

std::vector<FreeSpaceCluster> Pipeline::free_space_clusters(const Pose3& odometry) {
  const auto& fs = config_.free_space;
  const double half = fs.t_r + fs.grid_margin;
  const int n = static_cast<int>(std::ceil(2.0 * half / fs.resolution));
  const Vec2 center = odometry.translation.head<2>();
  auto grid = OccupancyGrid::filled(center - Vec2(half, half), fs.resolution, n, n, Cell::Unknown);
  for (const auto& [pose, points] : window_) integrate_scan(grid, pose, points, fs.z_min, fs.z_max);

  const auto field = build_distance_field(grid);
  auto graph = build_free_space_graph(field, center, fs.t_r, fs.vertex_spacing);
  graph = apply_drift_correction(graph, result_.graph.drift);
  return cluster_free_space(graph, fs.t_lambda);
}

void Pipeline::segment_rooms(const Pose3& odometry, const std::set<LandmarkId>& seen) {
  auto& r = result_;
  auto clusters = free_space_clusters(odometry);
  r.last_clusters = clusters;
  if (clusters.empty() || seen.empty()) return;

  if (config_.rooms.robot_cluster_only) {
    const Vec2 robot = compose(r.graph.drift, odometry).translation.head<2>();
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& c : clusters) {
      for (const auto& p : c.positions) {
        const double d = (p - robot).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c.cluster_id;
        }
      }
    }
    std::erase_if(clusters, [best](const FreeSpaceCluster& c) { return c.cluster_id != best; });
  }

  std::vector<PlaneLandmark> visible;
  for (const auto& w : r.walls) {
    if (seen.count(w.id)) visible.push_back(w);
  }
  // Walls in view carry the association (a re-mapped wall shows up there);
  // when they only make a two-wall room, a wall out of view may close it.
  auto candidates = extract_rooms(clusters, visible, config_.room_extraction_params());
  for (auto& cand : candidates) {
    if (!is_two_wall(cand.kind)) continue;
    const auto source = std::find_if(clusters.begin(), clusters.end(),
                                     [&](const FreeSpaceCluster& c) { return c.cluster_id == cand.source_cluster; });
    const auto all = extract_rooms(std::span(&*source, 1), r.walls, config_.room_extraction_params());
    if (!all.empty() && all.front().kind == RoomKind::FourWall) cand = all.front();
  }
  const auto params = config_.room_association_params();
  for (const auto& cand : candidates) {
    const auto assoc = associate_room(cand, r.rooms, r.walls, params);
    if (assoc.kind == RoomAssociation::Kind::New) {
      MappedRoom room;
      room.room_id = r.graph.add_room(cand.center, is_two_wall(cand.kind));
      room.kind = cand.kind;
      room.center = cand.center;
      room.wall_ids = cand.wall_ids;
      r.rooms.push_back(room);
      add_room_factor(room, cand);
      if (r.floor) add_floor_room_factor(room.room_id);
      continue;
    }
    const auto it = std::find_if(r.rooms.begin(), r.rooms.end(),
                                 [&](const MappedRoom& m) { return m.room_id == assoc.room_id; });
    add_room_factor(*it, cand);
    const double s = config_.noise_model.duplicate_sigma;
    for (const auto& dup : assoc.duplicates) {
      if (!duplicate_factors_.insert({dup.keep_id, dup.merge_id}).second) continue;
      r.duplicates.push_back(dup);
      r.graph.add_factor(make_duplicate_plane_factor(dup.keep_id, dup.merge_id, Mat3::Identity() / (s * s)));
    }
  }
}

void Pipeline::add_room_factor(const MappedRoom& room, const RoomCandidate& candidate) {
  auto& g = result_.graph;
  const auto info = isotropic_info(config_.noise_model.room_sigma);
  const auto& w = room.wall_ids;
  if (room.kind == RoomKind::FourWall) {
    g.add_factor(make_four_wall_room_factor(room.room_id, w[0], w[1], w[2], w[3], info));
    return;
  }
  // The cluster centre moves with whatever part of the corridor is in view.
  // All factors of the room share the running mean, and the room state and
  // its floor offset are re-seated so that the measurements stay consistent.
  auto& acc = two_wall_centers_.try_emplace(room.room_id, Vec2::Zero(), 0).first->second;
  acc.first += candidate.cluster_center;
  acc.second += 1;
  const Vec2 c = acc.first / acc.second;
  if (acc.second > 1) {
    const Vec2 center = two_wall_room_center(minimal_to_plane(g.node(w[0]).plane()),
                                             minimal_to_plane(g.node(w[1]).plane()), c);
    g.node(room.room_id).state = center;
    for (auto& f : g.mutable_factors()) {
      if (f.kind == FactorKind::TwoWallRoom && f.nodes[0] == room.room_id) f.measurement = c;
      if (f.kind == FactorKind::FloorRoom && f.nodes[1] == room.room_id) {
        f.measurement = center - g.node(f.nodes[0]).point();
      }
    }
  }
  g.add_factor(make_two_wall_room_factor(room.room_id, w[0], w[1], c, info));
}

void Pipeline::add_floor_room_factor(NodeId room) {
  auto& g = result_.graph;
  const Vec2 delta = g.node(room).point() - g.node(result_.floor->node).point();
  g.add_factor(make_floor_room_factor(result_.floor->node, room, delta, isotropic_info(config_.noise_model.floor_sigma)));
}

void Pipeline::segment_floor_level() {
  auto& r = result_;
  const auto cand = segment_floor(r.walls, config_.floor_params());
  if (!cand) return;
  if (!r.floor) {
    r.floor = MappedFloor{r.graph.add_floor(cand->center), cand->center, cand->bounding_wall_ids};
    for (const auto& room : r.rooms) add_floor_room_factor(room.room_id);
    return;
  }
  if (!floor_update_needed(r.floor->center, cand->center, config_.floors.t_f)) return;
  r.floor->center = cand->center;
  r.floor->wall_ids = cand->bounding_wall_ids;
  r.graph.node(r.floor->node).state = cand->center;
  for (auto& f : r.graph.mutable_factors()) {
    if (f.kind != FactorKind::FloorRoom) continue;
    f.measurement = r.graph.node(f.nodes[1]).point() - cand->center;
  }
}

void Pipeline::run_backend() {
  auto& r = result_;
  since_optimize_ = 0;
  if (r.keyframes.empty()) return;
  {
    StageTimer t(r.timing, "backend");
    check_solvable(r.graph);
    r.solver_reports.push_back(optimize(r.graph, config_.solver_options()));
    r.solver_factor_counts.push_back(r.graph.factors().size());
  }
  refresh_walls();
  for (auto& room : r.rooms) room.center = r.graph.node(room.room_id).point();
  update_drift(r.graph, r.keyframes.back().odometry);
}

void Pipeline::refresh_walls() {
  auto& r = result_;
  std::map<LandmarkId, std::set<CellKey>> cells;
  for (auto& w : r.walls) {
    w.plane_map = r.graph.node(w.id).plane();
    w.points_map.clear();
  }
  std::map<LandmarkId, PlaneLandmark*> by_id;
  for (auto& w : r.walls) by_id[w.id] = &w;
  for (const auto& obs : r.observations) {
    const Pose3& pose = r.graph.node(obs.keyframe).pose();
    PlaneLandmark& lm = *by_id.at(obs.wall);
    auto& c = cells[obs.wall];
    for (const auto& p : obs.points) {
      const Vec3 q = pose.transform_point(p);
      if (c.insert(cell2(q, config_.landmark_voxel)).second) lm.points_map.push_back(q);
    }
  }
}

PipelineResult run_pipeline(const SensorLog& log, const PipelineConfig& config) {
  if (log.timestamps.size() != log.odometry.size() || log.timestamps.size() != log.clouds.size()) {
    throw std::invalid_argument("sensor log: timestamps, odometry and clouds differ in length");
  }
  Pipeline p(config);
  for (std::size_t k = 0; k < log.timestamps.size(); ++k) p.process(log.timestamps[k], log.odometry[k], log.clouds[k]);
  p.finish();
  return std::move(p.result());
}

Trajectory estimated_trajectory(const PipelineResult& result) {
  Trajectory out;
  for (const auto& k : result.keyframes) out.push_back({k.timestamp, result.graph.node(k.node).pose()});
  return out;
}

Trajectory odometry_trajectory(const PipelineResult& result) {
  Trajectory out;
  for (const auto& k : result.keyframes) out.push_back({k.timestamp, k.odometry});
  return out;
}

std::vector<Vec3> map_cloud(const PipelineResult& result, double voxel) {
  std::set<std::array<long, 3>> seen;
  std::vector<Vec3> out;
  for (const auto& obs : result.observations) {
    const Pose3& pose = result.graph.node(obs.keyframe).pose();
    for (const auto& p : obs.points) {
      const Vec3 q = pose.transform_point(p);
      const std::array<long, 3> key{static_cast<long>(std::floor(q.x() / voxel)),
                                    static_cast<long>(std::floor(q.y() / voxel)),
                                    static_cast<long>(std::floor(q.z() / voxel))};
      if (seen.insert(key).second) out.push_back(q);
    }
  }
  return out;
}

std::vector<DetectedRoom> detected_rooms(const PipelineResult& result) {
  std::vector<DetectedRoom> out;
  for (const auto& room : result.rooms) out.push_back({room.kind, result.graph.node(room.room_id).point()});
  return out;
}

namespace {

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::string class_tag(const PlaneClass& c) {
  return std::string(to_string(c.axis)) + "_" + std::string(to_string(c.sign));
}

}  // namespace

std::string scene_graph_json(const PipelineResult& result) {
  const auto& g = result.graph;
  json kfs = json::array();
  for (const auto& k : result.keyframes) {
    const Pose3& p = g.node(k.node).pose();
    kfs.push_back({{"id", k.node},
                   {"timestamp", k.timestamp},
                   {"translation", vec(p.translation)},
                   {"rotation", {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()}}});
  }
  json walls = json::array();
  for (const auto& w : result.walls) {
    const PlaneMinimal& m = g.node(w.id).plane();
    const Plane pl = minimal_to_plane(m);
    walls.push_back({{"id", w.id},
                     {"normal", vec(pl.normal)},
                     {"distance", pl.distance},
                     {"minimal", vec(m.as_vector())},
                     {"class", class_tag(w.plane_class)},
                     {"keyframes", w.observing_keyframes}});
  }
  json rooms = json::array();
  for (const auto& r : result.rooms) {
    rooms.push_back({{"id", r.room_id},
                     {"kind", std::string(to_string(r.kind))},
                     {"center", vec(g.node(r.room_id).point())},
                     {"wall_ids", r.wall_ids}});
  }
  json floors = json::array();
  if (result.floor) {
    std::vector<NodeId> room_ids;
    for (const auto& f : g.factors()) {
      if (f.kind == FactorKind::FloorRoom && f.nodes[0] == result.floor->node) room_ids.push_back(f.nodes[1]);
    }
    std::sort(room_ids.begin(), room_ids.end());
    room_ids.erase(std::unique(room_ids.begin(), room_ids.end()), room_ids.end());
    floors.push_back({{"id", result.floor->node},
                      {"center", vec(g.node(result.floor->node).point())},
                      {"wall_ids", result.floor->wall_ids},
                      {"room_ids", room_ids}});
  }
  json dups = json::array();
  for (const auto& d : result.duplicates) dups.push_back({{"keep", d.keep_id}, {"merge", d.merge_id}});
  json edges = json::array();
  for (const auto& f : g.factors()) {
    const auto r = factor_residual(g, f);
    edges.push_back({{"kind", std::string(to_string(f.kind))}, {"nodes", f.nodes}, {"cost", r.dot(f.information * r)}});
  }
  const json out{{"schema", "sgraph-scene/1"},
                 {"layers", {{"keyframes", kfs}, {"walls", walls}, {"rooms", rooms}, {"floors", floors}}},
                 {"duplicates", dups},
                 {"edges", edges}};
  return out.dump(1);
}

}  // namespace sgraphs
