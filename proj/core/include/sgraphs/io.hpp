#pragma once

#include "sgraphs/evaluation.hpp"
#include "sgraphs/free_space.hpp"
#include "sgraphs/geometry.hpp"
#include "sgraphs/simulator.hpp"

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgraphs {

/// Malformed or missing input. The message names the file and, where it
/// applies, the line or field path.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `timestamp tx ty tz qx qy qz qw`, 9 significant digits.
void write_tum(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_tum(const std::filesystem::path& path);

/// ASCII PLY with float x, y, z vertex properties.
void write_ply(const std::filesystem::path& path, std::span<const Vec3> points);
std::vector<Vec3> read_ply(const std::filesystem::path& path);

/// One `x,y,z` per line; a non-numeric first line is taken as a header.
std::vector<Vec3> read_points_csv(const std::filesystem::path& path);
/// PLY or CSV by extension.
std::vector<Vec3> read_points(const std::filesystem::path& path);

/// Binary PGM (P5) plus `<path>.json` sidecar holding origin, resolution and
/// the free/occupied thresholds. Rows run from the top (highest y) down.
void write_pgm(const std::filesystem::path& path, const OccupancyGrid& grid);
/// Reads P2 or P5; the sidecar must be present.
OccupancyGrid read_pgm(const std::filesystem::path& path);

/// JSON object {"origin": [x, y], "resolution": r, "rows": [...]} with one
/// string per row, top row first: '.' free, '#' occupied, '?' unknown.
std::string grid_to_json(const OccupancyGrid& grid);
OccupancyGrid grid_from_json(const std::string& text);

/// Scene description files.
SceneSpec read_scene_spec(const std::filesystem::path& path);
SceneSpec parse_scene_spec(const std::string& text);
std::string scene_spec_to_json(const SceneSpec& spec);

/// Ground-truth planes, rooms and floor centre.
void write_ground_truth(const std::filesystem::path& path, const SyntheticScene& scene);
std::vector<TruthRoom> read_truth_rooms(const std::filesystem::path& path);

/// Writes rows with a header; values use up to 9 significant digits.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
std::string format_number(double v);

}  // namespace sgraphs
