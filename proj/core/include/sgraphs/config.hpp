#pragma once

#include "sgraphs/factor_graph.hpp"
#include "sgraphs/plane_extraction.hpp"
#include "sgraphs/room_segmentation.hpp"
#include "sgraphs/solver.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace sgraphs {

// Mirrors the JSON config file one to one; angles are kept in degrees as
// written so that dumping and re-loading a config is exact.

struct PlaneAssociationConfig {
  double gate_m = 0.35;
  double sigma_azimuth = 0.1;
  double sigma_elevation = 0.1;
  double sigma_distance = 0.15;
  double max_normal_angle_deg = 15.0;
};

struct FreeSpaceConfig {
  double t_r = 10.0;
  double t_lambda = 0.8;
  double resolution = 0.1;
  double vertex_spacing = 0.2;
  int window_keyframes = 10;  // clouds ray-cast into the local grid
  double z_min = 0.2;         // points outside [z_min, z_max] are not ray-cast
  double z_max = 2.2;
  double grid_margin = 1.0;   // grid half-size is t_r + margin
};

struct RoomConfig {
  double proximity = 1.0;
  double t_w = 0.5;
  double enclosure_overlap = 0.8;
  double two_wall_min_aspect = 1.0;
  double room_gate = 1.0;
  double plane_gate_m = 1.0;
  double point_gate = 0.5;
  bool robot_cluster_only = true;
};

struct FloorConfig {
  double t_n = 0.9;
  FloorDotGate dot_gate = FloorDotGate::AntiParallel;
  double level_height = 3.0;
  double t_f = 0.5;
};

struct KeyframeConfig {
  double translation = 1.0;
  double rotation_deg = 15.0;
};

struct NoiseModelConfig {
  double odom_translation_sigma = 0.03;   // per keyframe
  double odom_rotation_sigma_deg = 0.3;   // per keyframe
  double plane_sigma_azimuth = 0.005;     // added to the fitted covariance
  double plane_sigma_elevation = 0.005;
  double plane_sigma_distance = 0.01;
  double room_sigma = 0.1;
  double floor_sigma = 0.1;
  double duplicate_sigma = 0.01;
};

struct SolverConfig {
  int max_iterations = 100;
  double cost_tol = 1e-10;
  double grad_tol = 1e-10;
  double initial_lambda = 1e-4;
  std::optional<double> huber;
  int optimize_every = 1;
};

struct PipelineConfig {
  RansacParams ransac;
  double landmark_voxel = 0.1;  // subsampling of stored wall points, m
  PlaneAssociationConfig plane_association;
  FreeSpaceConfig free_space;
  RoomConfig rooms;
  FloorConfig floors;
  KeyframeConfig keyframes;
  NoiseModelConfig noise_model;
  SolverConfig solver;

  PlaneAssociationParams plane_association_params() const;
  RoomExtractionParams room_extraction_params() const;
  RoomAssociationParams room_association_params() const;
  FloorParams floor_params() const;
  KeyframeGates keyframe_gates() const;
  SolverOptions solver_options() const;
};

/// Throws InputError naming the field path of the first invalid value.
void validate(const PipelineConfig& config);

/// Missing fields take their defaults; unknown fields are rejected.
PipelineConfig parse_config(const std::string& text);
PipelineConfig read_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);

}  // namespace sgraphs
