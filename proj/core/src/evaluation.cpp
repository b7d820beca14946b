#include "sgraphs/evaluation.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace sgraphs {

Pose3 align_rigid(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size() || source.empty()) throw std::invalid_argument("align_rigid: size mismatch");
  Eigen::Matrix3Xd src(3, source.size()), dst(3, target.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    src.col(i) = source[i];
    dst.col(i) = target[i];
  }
  const Mat4 T = Eigen::umeyama(src, dst, false);
  Eigen::Quaterniond q(Mat3(T.block<3, 3>(0, 0)));
  return Pose3::from_rotation_translation(q.normalized(), T.block<3, 1>(0, 3));
}

AteReport ate(const Trajectory& estimated, const Trajectory& truth, double max_dt) {
  std::vector<Vec3> src, dst;
  for (const auto& e : estimated) {
    auto it = std::lower_bound(truth.begin(), truth.end(), e.timestamp,
                               [](const StampedPose& s, double t) { return s.timestamp < t; });
    const StampedPose* best = nullptr;
    if (it != truth.end()) best = &*it;
    if (it != truth.begin()) {
      const StampedPose* prev = &*(it - 1);
      if (!best || std::abs(prev->timestamp - e.timestamp) <= std::abs(best->timestamp - e.timestamp)) best = prev;
    }
    if (!best || std::abs(best->timestamp - e.timestamp) > max_dt) continue;
    src.push_back(e.pose.translation);
    dst.push_back(best->pose.translation);
  }
  if (src.size() < 3) throw std::invalid_argument("ate: fewer than 3 associated poses");
  AteReport rep;
  rep.alignment = align_rigid(src, dst);
  double sum = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double e = (rep.alignment.transform_point(src[i]) - dst[i]).norm();
    rep.errors.push_back(e);
    sum += e * e;
  }
  rep.rmse = std::sqrt(sum / static_cast<double>(src.size()));
  return rep;
}

namespace {

struct CellKey {
  long long x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return std::hash<long long>()(k.x * 73856093LL ^ k.y * 19349663LL ^ k.z * 83492791LL);
  }
};

}  // namespace

MapRmseReport map_rmse(std::span<const Vec3> estimated, std::span<const Vec3> truth, double cap) {
  if (estimated.empty() || truth.empty()) throw std::invalid_argument("map_rmse: empty point cloud");
  if (!(cap > 0.0)) throw std::invalid_argument("map_rmse: cap must be positive");
  auto key = [cap](const Vec3& p) {
    return CellKey{static_cast<long long>(std::floor(p.x() / cap)), static_cast<long long>(std::floor(p.y() / cap)),
                   static_cast<long long>(std::floor(p.z() / cap))};
  };
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> bins;
  for (std::size_t i = 0; i < truth.size(); ++i) bins[key(truth[i])].push_back(i);

  double sum = 0.0;
  std::size_t matched = 0;
  for (const auto& p : estimated) {
    const CellKey k = key(p);
    double best = cap * cap;
    bool found = false;
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        for (long long dz = -1; dz <= 1; ++dz) {
          auto it = bins.find({k.x + dx, k.y + dy, k.z + dz});
          if (it == bins.end()) continue;
          for (std::size_t i : it->second) {
            const double d2 = (truth[i] - p).squaredNorm();
            if (d2 <= best) {
              best = d2;
              found = true;
            }
          }
        }
      }
    }
    if (found) {
      sum += best;
      ++matched;
    }
  }
  MapRmseReport rep;
  rep.matched_fraction = static_cast<double>(matched) / static_cast<double>(estimated.size());
  if (matched > 0) rep.rmse = std::sqrt(sum / static_cast<double>(matched));
  return rep;
}

double PrCounts::precision() const {
  const int den = true_positives + false_positives;
  return den == 0 ? 1.0 : static_cast<double>(true_positives) / den;
}

double PrCounts::recall() const {
  const int den = true_positives + false_negatives;
  return den == 0 ? 1.0 : static_cast<double>(true_positives) / den;
}

PrReport room_pr(std::span<const DetectedRoom> detected, std::span<const TruthRoom> truth, double center_gate) {
  struct Pair {
    double d;
    int det, tru;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < detected.size(); ++i) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (is_two_wall(detected[i].kind) != is_two_wall(truth[j].kind)) continue;
      const double d = (detected[i].center - truth[j].center).norm();
      if (d <= center_gate) pairs.push_back({d, static_cast<int>(i), static_cast<int>(j)});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.det != b.det) return a.det < b.det;
    return a.tru < b.tru;
  });
  std::vector<bool> det_used(detected.size(), false), tru_used(truth.size(), false);
  PrReport rep;
  for (const auto& p : pairs) {
    if (det_used[p.det] || tru_used[p.tru]) continue;
    det_used[p.det] = tru_used[p.tru] = true;
    rep.matches.push_back({p.det, p.tru, p.d});
  }
  auto bucket = [&](bool two) -> PrCounts& { return two ? rep.two_wall : rep.four_wall; };
  for (std::size_t i = 0; i < detected.size(); ++i) {
    auto& c = bucket(is_two_wall(detected[i].kind));
    (det_used[i] ? c.true_positives : c.false_positives)++;
  }
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (!tru_used[j]) bucket(is_two_wall(truth[j].kind)).false_negatives++;
  }
  rep.overall.true_positives = rep.four_wall.true_positives + rep.two_wall.true_positives;
  rep.overall.false_positives = rep.four_wall.false_positives + rep.two_wall.false_positives;
  rep.overall.false_negatives = rep.four_wall.false_negatives + rep.two_wall.false_negatives;
  return rep;
}

void TimingRecorder::add(const std::string& stage, double milliseconds) { samples_[stage].push_back(milliseconds); }

const std::vector<double>& TimingRecorder::samples(const std::string& stage) const {
  static const std::vector<double> empty;
  auto it = samples_.find(stage);
  return it == samples_.end() ? empty : it->second;
}

std::vector<std::string> TimingRecorder::stages() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : samples_) out.push_back(k);
  return out;
}

std::vector<TimingRow> timing_report(const TimingRecorder& recorder) {
  std::vector<TimingRow> rows;
  for (const auto& stage : timing_stages()) {
    const auto& s = recorder.samples(stage);
    TimingRow row;
    row.stage = stage;
    row.count = s.size();
    if (!s.empty()) {
      double sum = 0.0;
      for (double v : s) sum += v;
      row.mean_ms = sum / static_cast<double>(s.size());
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> window_means(std::span<const double> samples, std::size_t window) {
  if (window == 0) throw std::invalid_argument("window must be positive");
  std::vector<double> out;
  for (std::size_t start = 0; start + window <= samples.size(); start += window) {
    double sum = 0.0;
    for (std::size_t i = start; i < start + window; ++i) sum += samples[i];
    out.push_back(sum / static_cast<double>(window));
  }
  return out;
}

double percentage_improvement(double baseline, double ours) {
  if (baseline == 0.0) throw std::invalid_argument("baseline must be nonzero");
  return (baseline - ours) / baseline * 100.0;
}

}  // namespace sgraphs
