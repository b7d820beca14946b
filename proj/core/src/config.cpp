#include "sgraphs/config.hpp"

#include "json_reader.hpp"
#include "sgraphs/io.hpp"

#include <fstream>
#include <sstream>

namespace sgraphs {

using nlohmann::json;

PlaneAssociationParams PipelineConfig::plane_association_params() const {
  PlaneAssociationParams p;
  p.gate_m = plane_association.gate_m;
  p.default_covariance = Vec3(plane_association.sigma_azimuth * plane_association.sigma_azimuth,
                              plane_association.sigma_elevation * plane_association.sigma_elevation,
                              plane_association.sigma_distance * plane_association.sigma_distance)
                             .asDiagonal();
  p.max_normal_angle = deg2rad(plane_association.max_normal_angle_deg);
  return p;
}

RoomExtractionParams PipelineConfig::room_extraction_params() const {
  return {rooms.proximity, rooms.t_w, rooms.enclosure_overlap, rooms.two_wall_min_aspect};
}

RoomAssociationParams PipelineConfig::room_association_params() const {
  RoomAssociationParams p;
  p.room_gate = rooms.room_gate;
  p.plane_gate_m = rooms.plane_gate_m;
  p.plane_covariance = plane_association_params().default_covariance;
  p.point_gate = rooms.point_gate;
  return p;
}

FloorParams PipelineConfig::floor_params() const { return {floors.t_n, floors.dot_gate, floors.level_height}; }

KeyframeGates PipelineConfig::keyframe_gates() const {
  return {keyframes.translation, deg2rad(keyframes.rotation_deg)};
}

SolverOptions PipelineConfig::solver_options() const {
  SolverOptions o;
  o.max_iterations = solver.max_iterations;
  o.cost_tol = solver.cost_tol;
  o.grad_tol = solver.grad_tol;
  o.initial_lambda = solver.initial_lambda;
  o.huber = solver.huber;
  return o;
}

namespace {

void positive(double v, const char* path) {
  if (!(v > 0.0)) throw InputError(std::string(path) + ": must be > 0");
}

void non_negative(double v, const char* path) {
  if (!(v >= 0.0)) throw InputError(std::string(path) + ": must be >= 0");
}

}  // namespace

void validate(const PipelineConfig& c) {
  positive(c.ransac.inlier_threshold, "ransac.inlier_threshold");
  if (c.ransac.min_inliers < 3) throw InputError("ransac.min_inliers: must be >= 3");
  if (c.ransac.max_planes < 1) throw InputError("ransac.max_planes: must be >= 1");
  if (c.ransac.iterations < 1) throw InputError("ransac.iterations: must be >= 1");
  positive(c.landmark_voxel, "landmark_voxel");

  positive(c.plane_association.gate_m, "plane_association.gate_m");
  positive(c.plane_association.sigma_azimuth, "plane_association.sigma_azimuth");
  positive(c.plane_association.sigma_elevation, "plane_association.sigma_elevation");
  positive(c.plane_association.sigma_distance, "plane_association.sigma_distance");
  positive(c.plane_association.max_normal_angle_deg, "plane_association.max_normal_angle_deg");

  positive(c.free_space.t_r, "free_space.t_r");
  positive(c.free_space.t_lambda, "free_space.t_lambda");
  positive(c.free_space.resolution, "free_space.resolution");
  positive(c.free_space.vertex_spacing, "free_space.vertex_spacing");
  if (c.free_space.window_keyframes < 1) throw InputError("free_space.window_keyframes: must be >= 1");
  if (!(c.free_space.z_max > c.free_space.z_min)) throw InputError("free_space.z_max: must exceed z_min");
  non_negative(c.free_space.grid_margin, "free_space.grid_margin");

  positive(c.rooms.proximity, "rooms.proximity");
  positive(c.rooms.t_w, "rooms.t_w");
  if (!(c.rooms.enclosure_overlap > 0.0 && c.rooms.enclosure_overlap <= 1.0)) {
    throw InputError("rooms.enclosure_overlap: must be in (0, 1]");
  }
  positive(c.rooms.two_wall_min_aspect, "rooms.two_wall_min_aspect");
  positive(c.rooms.room_gate, "rooms.room_gate");
  positive(c.rooms.plane_gate_m, "rooms.plane_gate_m");
  positive(c.rooms.point_gate, "rooms.point_gate");

  if (!(c.floors.t_n > 0.0 && c.floors.t_n <= 1.0)) throw InputError("floors.t_n: must be in (0, 1]");
  positive(c.floors.level_height, "floors.level_height");
  positive(c.floors.t_f, "floors.t_f");

  positive(c.keyframes.translation, "keyframes.translation");
  positive(c.keyframes.rotation_deg, "keyframes.rotation_deg");

  positive(c.noise_model.odom_translation_sigma, "noise_model.odom_translation_sigma");
  positive(c.noise_model.odom_rotation_sigma_deg, "noise_model.odom_rotation_sigma_deg");
  non_negative(c.noise_model.plane_sigma_azimuth, "noise_model.plane_sigma_azimuth");
  non_negative(c.noise_model.plane_sigma_elevation, "noise_model.plane_sigma_elevation");
  non_negative(c.noise_model.plane_sigma_distance, "noise_model.plane_sigma_distance");
  positive(c.noise_model.room_sigma, "noise_model.room_sigma");
  positive(c.noise_model.floor_sigma, "noise_model.floor_sigma");
  positive(c.noise_model.duplicate_sigma, "noise_model.duplicate_sigma");

  if (c.solver.max_iterations < 1) throw InputError("solver.max_iterations: must be >= 1");
  positive(c.solver.cost_tol, "solver.cost_tol");
  positive(c.solver.grad_tol, "solver.grad_tol");
  positive(c.solver.initial_lambda, "solver.initial_lambda");
  if (c.solver.huber) positive(*c.solver.huber, "solver.huber");
  if (c.solver.optimize_every < 1) throw InputError("solver.optimize_every: must be >= 1");
}

PipelineConfig parse_config(const std::string& text) {
  using detail::Reader;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: invalid JSON: ") + e.what());
  }
  PipelineConfig c;
  const Reader root(j, "");
  root.allow({"ransac", "landmark_voxel", "plane_association", "free_space", "rooms", "floors", "keyframes",
              "noise_model", "solver"});

  const Reader r = root.object("ransac");
  r.allow({"inlier_threshold", "min_inliers", "max_planes", "iterations", "seed"});
  c.ransac.inlier_threshold = r.number("inlier_threshold", c.ransac.inlier_threshold);
  c.ransac.min_inliers = static_cast<std::size_t>(r.integer("min_inliers", static_cast<int>(c.ransac.min_inliers)));
  c.ransac.max_planes = static_cast<std::size_t>(r.integer("max_planes", static_cast<int>(c.ransac.max_planes)));
  c.ransac.iterations = r.integer("iterations", c.ransac.iterations);
  const int seed = r.integer("seed", static_cast<int>(c.ransac.seed));
  if (seed < 0) throw InputError("ransac.seed: must be >= 0");
  c.ransac.seed = static_cast<std::uint64_t>(seed);
  c.landmark_voxel = root.number("landmark_voxel", c.landmark_voxel);

  const Reader pa = root.object("plane_association");
  pa.allow({"gate_m", "sigma_azimuth", "sigma_elevation", "sigma_distance", "max_normal_angle_deg"});
  auto& a = c.plane_association;
  a.gate_m = pa.number("gate_m", a.gate_m);
  a.sigma_azimuth = pa.number("sigma_azimuth", a.sigma_azimuth);
  a.sigma_elevation = pa.number("sigma_elevation", a.sigma_elevation);
  a.sigma_distance = pa.number("sigma_distance", a.sigma_distance);
  a.max_normal_angle_deg = pa.number("max_normal_angle_deg", a.max_normal_angle_deg);

  const Reader fs = root.object("free_space");
  fs.allow({"t_r", "t_lambda", "resolution", "vertex_spacing", "window_keyframes", "z_min", "z_max", "grid_margin"});
  auto& f = c.free_space;
  f.t_r = fs.number("t_r", f.t_r);
  f.t_lambda = fs.number("t_lambda", f.t_lambda);
  f.resolution = fs.number("resolution", f.resolution);
  f.vertex_spacing = fs.number("vertex_spacing", f.vertex_spacing);
  f.window_keyframes = fs.integer("window_keyframes", f.window_keyframes);
  f.z_min = fs.number("z_min", f.z_min);
  f.z_max = fs.number("z_max", f.z_max);
  f.grid_margin = fs.number("grid_margin", f.grid_margin);

  const Reader ro = root.object("rooms");
  ro.allow({"proximity", "t_w", "enclosure_overlap", "two_wall_min_aspect", "room_gate", "plane_gate_m",
            "point_gate", "robot_cluster_only"});
  auto& rc = c.rooms;
  rc.proximity = ro.number("proximity", rc.proximity);
  rc.t_w = ro.number("t_w", rc.t_w);
  rc.enclosure_overlap = ro.number("enclosure_overlap", rc.enclosure_overlap);
  rc.two_wall_min_aspect = ro.number("two_wall_min_aspect", rc.two_wall_min_aspect);
  rc.room_gate = ro.number("room_gate", rc.room_gate);
  rc.plane_gate_m = ro.number("plane_gate_m", rc.plane_gate_m);
  rc.point_gate = ro.number("point_gate", rc.point_gate);
  rc.robot_cluster_only = ro.boolean("robot_cluster_only", rc.robot_cluster_only);

  const Reader fl = root.object("floors");
  fl.allow({"t_n", "dot_gate", "level_height", "t_f"});
  auto& fc = c.floors;
  fc.t_n = fl.number("t_n", fc.t_n);
  const std::string gate = fl.string("dot_gate", std::string("anti_parallel"));
  if (gate == "anti_parallel") fc.dot_gate = FloorDotGate::AntiParallel;
  else if (gate == "literal") fc.dot_gate = FloorDotGate::Literal;
  else throw InputError("floors.dot_gate: expected \"anti_parallel\" or \"literal\"");
  fc.level_height = fl.number("level_height", fc.level_height);
  fc.t_f = fl.number("t_f", fc.t_f);

  const Reader kf = root.object("keyframes");
  kf.allow({"translation", "rotation_deg"});
  c.keyframes.translation = kf.number("translation", c.keyframes.translation);
  c.keyframes.rotation_deg = kf.number("rotation_deg", c.keyframes.rotation_deg);

  const Reader nm = root.object("noise_model");
  nm.allow({"odom_translation_sigma", "odom_rotation_sigma_deg", "plane_sigma_azimuth", "plane_sigma_elevation",
            "plane_sigma_distance", "room_sigma", "floor_sigma", "duplicate_sigma"});
  auto& n = c.noise_model;
  n.odom_translation_sigma = nm.number("odom_translation_sigma", n.odom_translation_sigma);
  n.odom_rotation_sigma_deg = nm.number("odom_rotation_sigma_deg", n.odom_rotation_sigma_deg);
  n.plane_sigma_azimuth = nm.number("plane_sigma_azimuth", n.plane_sigma_azimuth);
  n.plane_sigma_elevation = nm.number("plane_sigma_elevation", n.plane_sigma_elevation);
  n.plane_sigma_distance = nm.number("plane_sigma_distance", n.plane_sigma_distance);
  n.room_sigma = nm.number("room_sigma", n.room_sigma);
  n.floor_sigma = nm.number("floor_sigma", n.floor_sigma);
  n.duplicate_sigma = nm.number("duplicate_sigma", n.duplicate_sigma);

  const Reader so = root.object("solver");
  so.allow({"max_iterations", "cost_tol", "grad_tol", "initial_lambda", "huber", "optimize_every"});
  auto& s = c.solver;
  s.max_iterations = so.integer("max_iterations", s.max_iterations);
  s.cost_tol = so.number("cost_tol", s.cost_tol);
  s.grad_tol = so.number("grad_tol", s.grad_tol);
  s.initial_lambda = so.number("initial_lambda", s.initial_lambda);
  s.huber = so.nullable_number("huber");
  s.optimize_every = so.integer("optimize_every", s.optimize_every);

  validate(c);
  return c;
}

PipelineConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const PipelineConfig& c) {
  const auto& a = c.plane_association;
  const auto& f = c.free_space;
  const auto& r = c.rooms;
  const auto& fl = c.floors;
  const auto& n = c.noise_model;
  const auto& s = c.solver;
  json j{
      {"ransac",
       {{"inlier_threshold", c.ransac.inlier_threshold},
        {"min_inliers", c.ransac.min_inliers},
        {"max_planes", c.ransac.max_planes},
        {"iterations", c.ransac.iterations},
        {"seed", c.ransac.seed}}},
      {"landmark_voxel", c.landmark_voxel},
      {"plane_association",
       {{"gate_m", a.gate_m},
        {"sigma_azimuth", a.sigma_azimuth},
        {"sigma_elevation", a.sigma_elevation},
        {"sigma_distance", a.sigma_distance},
        {"max_normal_angle_deg", a.max_normal_angle_deg}}},
      {"free_space",
       {{"t_r", f.t_r},
        {"t_lambda", f.t_lambda},
        {"resolution", f.resolution},
        {"vertex_spacing", f.vertex_spacing},
        {"window_keyframes", f.window_keyframes},
        {"z_min", f.z_min},
        {"z_max", f.z_max},
        {"grid_margin", f.grid_margin}}},
      {"rooms",
       {{"proximity", r.proximity},
        {"t_w", r.t_w},
        {"enclosure_overlap", r.enclosure_overlap},
        {"two_wall_min_aspect", r.two_wall_min_aspect},
        {"room_gate", r.room_gate},
        {"plane_gate_m", r.plane_gate_m},
        {"point_gate", r.point_gate},
        {"robot_cluster_only", r.robot_cluster_only}}},
      {"floors",
       {{"t_n", fl.t_n},
        {"dot_gate", fl.dot_gate == FloorDotGate::AntiParallel ? "anti_parallel" : "literal"},
        {"level_height", fl.level_height},
        {"t_f", fl.t_f}}},
      {"keyframes", {{"translation", c.keyframes.translation}, {"rotation_deg", c.keyframes.rotation_deg}}},
      {"noise_model",
       {{"odom_translation_sigma", n.odom_translation_sigma},
        {"odom_rotation_sigma_deg", n.odom_rotation_sigma_deg},
        {"plane_sigma_azimuth", n.plane_sigma_azimuth},
        {"plane_sigma_elevation", n.plane_sigma_elevation},
        {"plane_sigma_distance", n.plane_sigma_distance},
        {"room_sigma", n.room_sigma},
        {"floor_sigma", n.floor_sigma},
        {"duplicate_sigma", n.duplicate_sigma}}},
      {"solver",
       {{"max_iterations", s.max_iterations},
        {"cost_tol", s.cost_tol},
        {"grad_tol", s.grad_tol},
        {"initial_lambda", s.initial_lambda},
        {"huber", s.huber ? json(*s.huber) : json(nullptr)},
        {"optimize_every", s.optimize_every}}}};
  return j.dump(2);
}

}  // namespace sgraphs
