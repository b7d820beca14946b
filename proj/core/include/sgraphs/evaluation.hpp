#pragma once

#include "sgraphs/geometry.hpp"
#include "sgraphs/room_segmentation.hpp"
#include "sgraphs/simulator.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sgraphs {

struct StampedPose {
  double timestamp = 0.0;
  Pose3 pose;
};

using Trajectory = std::vector<StampedPose>;

struct AteReport {
  double rmse = 0.0;
  std::vector<double> errors;  // per associated pose, after alignment
  Pose3 alignment;             // applied to the estimate
};

/// Associates poses by nearest timestamp (within max_dt), aligns the
/// estimate rigidly (rotation + translation, no scale) and returns the
/// translation RMSE. Throws std::invalid_argument with fewer than 3 pairs.
AteReport ate(const Trajectory& estimated, const Trajectory& truth, double max_dt = 0.05);

/// Rigid least-squares alignment of `source` onto `target` (Umeyama, no scale).
Pose3 align_rigid(std::span<const Vec3> source, std::span<const Vec3> target);

struct MapRmseReport {
  std::optional<double> rmse;  // empty when nothing matched
  double matched_fraction = 0.0;
};

/// Nearest truth point for each estimated point; pairs farther than `cap`
/// are excluded. Throws std::invalid_argument on empty input.
MapRmseReport map_rmse(std::span<const Vec3> estimated, std::span<const Vec3> truth, double cap = 0.5);

struct DetectedRoom {
  RoomKind kind = RoomKind::FourWall;
  Vec2 center = Vec2::Zero();
};

struct PrCounts {
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;

  /// 1.0 when the denominator is zero.
  double precision() const;
  double recall() const;
};

struct RoomMatch {
  int detected = 0;
  int truth = 0;
  double distance = 0.0;
};

struct PrReport {
  PrCounts four_wall;
  PrCounts two_wall;
  PrCounts overall;
  std::vector<RoomMatch> matches;
};

/// Greedy one-to-one matching by centre distance (closest pairs first) within
/// `center_gate`; four-wall detections only match four-wall truth, two-wall
/// detections only match two-wall truth.
PrReport room_pr(std::span<const DetectedRoom> detected, std::span<const TruthRoom> truth, double center_gate = 1.5);

/// Wall-clock samples per pipeline stage.
class TimingRecorder {
 public:
  void add(const std::string& stage, double milliseconds);
  const std::vector<double>& samples(const std::string& stage) const;
  std::vector<std::string> stages() const;

 private:
  std::map<std::string, std::vector<double>> samples_;
};

struct TimingRow {
  std::string stage;
  std::size_t count = 0;
  std::optional<double> mean_ms;  // empty for zero samples ("n/a")
};

inline const std::vector<std::string>& timing_stages() {
  static const std::vector<std::string> stages{"plane_segmentation", "room_segmentation", "floor_segmentation",
                                               "backend"};
  return stages;
}

std::vector<TimingRow> timing_report(const TimingRecorder& recorder);

/// Mean of each consecutive window of `window` samples.
std::vector<double> window_means(std::span<const double> samples, std::size_t window);

/// Relative improvement of `ours` over `baseline`, percent: (baseline - ours) / baseline * 100.
double percentage_improvement(double baseline, double ours);

}  // namespace sgraphs
