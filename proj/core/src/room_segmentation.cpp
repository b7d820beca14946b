#include "sgraphs/room_segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace sgraphs {

std::string_view to_string(RoomKind kind) {
  switch (kind) {
    case RoomKind::FourWall: return "four_wall";
    case RoomKind::TwoWallX: return "two_wall_x";
    case RoomKind::TwoWallY: return "two_wall_y";
  }
  return "four_wall";
}

bool is_two_wall(RoomKind kind) { return kind != RoomKind::FourWall; }

namespace {

struct OrderedPair {
  Plane a;  // larger |d|
  Plane b;
};

OrderedPair canonical_pair(const Plane& a, const Plane& b) {
  Plane ca = canonicalize_away_from_origin(a);
  Plane cb = canonicalize_away_from_origin(b);
  if (std::abs(ca.distance) < std::abs(cb.distance)) std::swap(ca, cb);
  return {ca, cb};
}

void require_same_axis(const Plane& a, const Plane& b) {
  if (classify_plane(a).axis != classify_plane(b).axis) {
    throw std::invalid_argument("wall planes are on different axes");
  }
}

}  // namespace

Vec3 room_width(const Plane& a, const Plane& b) {
  require_same_axis(a, b);
  const auto [pa, pb] = canonical_pair(a, b);
  return std::abs(pa.distance) * pa.normal - std::abs(pb.distance) * pb.normal;
}

Vec3 wall_pair_midpoint(const Plane& a, const Plane& b) {
  const auto [pa, pb] = canonical_pair(a, b);
  const Vec3 fa = std::abs(pa.distance) * pa.normal;
  const Vec3 fb = std::abs(pb.distance) * pb.normal;
  return 0.5 * (fa - fb) + fb;
}

std::optional<Vec2> four_wall_room_center(const Plane& x_a, const Plane& x_b, const Plane& y_a, const Plane& y_b,
                                          double t_w) {
  if (room_width(x_a, x_b).norm() < t_w || room_width(y_a, y_b).norm() < t_w) return std::nullopt;
  const Vec3 r = wall_pair_midpoint(x_a, x_b) + wall_pair_midpoint(y_a, y_b);
  return Vec2(r.x(), r.y());
}

Vec2 two_wall_room_center(const Plane& a, const Plane& b, const Vec2& cluster_center) {
  require_same_axis(a, b);
  const Vec3 r = wall_pair_midpoint(a, b);
  const double norm = r.norm();
  if (norm < 1e-12) return cluster_center;
  const Vec3 rh = r / norm;
  const Vec3 c(cluster_center.x(), cluster_center.y(), 0.0);
  const Vec3 k = r + (c - c.dot(rh) * rh);
  return {k.x(), k.y()};
}

namespace {

int slot_index(const PlaneClass& cls) {
  const int axis = cls.axis == PlaneAxis::X ? 0 : 2;
  return axis + (cls.sign == PlaneSign::A ? 0 : 1);
}

// Smallest planar distance between any landmark point and any cluster vertex,
// or +inf when none are within `limit`.
double wall_cluster_distance(const PlaneLandmark& lm, const FreeSpaceCluster& cluster, double limit) {
  const double lo_x = cluster.x_min - limit, hi_x = cluster.x_max + limit;
  const double lo_y = cluster.y_min - limit, hi_y = cluster.y_max + limit;
  double best2 = std::numeric_limits<double>::infinity();
  for (const auto& p : lm.points_map) {
    if (p.x() < lo_x || p.x() > hi_x || p.y() < lo_y || p.y() > hi_y) continue;
    const Vec2 q = p.head<2>();
    for (const auto& v : cluster.positions) best2 = std::min(best2, (q - v).squaredNorm());
  }
  const double d = std::sqrt(best2);
  return d <= limit ? d : std::numeric_limits<double>::infinity();
}

// Coordinate of a vertical wall along its own axis, evaluated at `at`.
double wall_coordinate(const Plane& plane, int dim, const Vec2& at) {
  const int other = 1 - dim;
  return -(plane.normal(other) * at(other) + plane.distance) / plane.normal(dim);
}

// Each wall point is taken to cover half this distance on either side.
constexpr double kMaxPointGap = 0.5;

// Fraction of [lo, hi] along `dim` that the wall's points cover, openings
// (doorways, unobserved stretches) excluded.
double coverage(const PlaneLandmark& wall, int dim, double lo, double hi) {
  const double span = hi - lo;
  if (span <= 0.0) return 0.0;
  std::vector<double> s;
  for (const auto& p : wall.points_map) {
    if (p(dim) >= lo && p(dim) <= hi) s.push_back(p(dim));
  }
  if (s.empty()) return 0.0;
  std::sort(s.begin(), s.end());
  double open = 0.0;
  auto gap = [&open](double g) {
    open += std::max(0.0, g - kMaxPointGap);
  };
  gap(s.front() - lo);
  for (std::size_t i = 1; i < s.size(); ++i) gap(s[i] - s[i - 1]);
  gap(hi - s.back());
  return (span - open) / span;
}

struct Span {
  double lo, hi;
};

Span pair_span(const PlaneLandmark& a, const PlaneLandmark& b, int dim, const Vec2& at) {
  const double ca = wall_coordinate(a.plane(), dim, at), cb = wall_coordinate(b.plane(), dim, at);
  return {std::min(ca, cb), std::max(ca, cb)};
}

}  // namespace

std::vector<RoomCandidate> extract_rooms(std::span<const FreeSpaceCluster> clusters,
                                         std::span<const PlaneLandmark> landmarks,
                                         const RoomExtractionParams& params) {
  std::vector<RoomCandidate> out;
  for (const auto& cluster : clusters) {
    if (cluster.positions.empty()) continue;
    const Vec2 cc = cluster.center();

    std::array<const PlaneLandmark*, 4> slot{};
    std::array<double, 4> slot_dist;
    slot_dist.fill(std::numeric_limits<double>::infinity());
    for (const auto& lm : landmarks) {
      if (!lm.plane_class.is_wall()) continue;
      const Plane pl = lm.plane();
      // The free space has to be on the side the wall was seen from.
      if (pl.normal.x() * cc.x() + pl.normal.y() * cc.y() + pl.distance <= 0.0) continue;
      const double d = wall_cluster_distance(lm, cluster, params.proximity);
      if (!std::isfinite(d)) continue;
      const int k = slot_index(lm.plane_class);
      if (d < slot_dist[k] || (d == slot_dist[k] && slot[k] && lm.id < slot[k]->id)) {
        slot[k] = &lm;
        slot_dist[k] = d;
      }
    }

    const bool x_full = slot[0] && slot[1];
    const bool y_full = slot[2] && slot[3];
    const bool x_wide = x_full && room_width(slot[0]->plane(), slot[1]->plane()).norm() >= params.t_w;
    const bool y_wide = y_full && room_width(slot[2]->plane(), slot[3]->plane()).norm() >= params.t_w;

    // x-walls must run along the span between the y-walls and vice versa.
    // Without the opposing pair the cluster extent stands in for it.
    const Span x_span = x_full ? pair_span(*slot[0], *slot[1], 0, cc) : Span{cluster.x_min, cluster.x_max};
    const Span y_span = y_full ? pair_span(*slot[2], *slot[3], 1, cc) : Span{cluster.y_min, cluster.y_max};
    const double f = params.enclosure_overlap;
    const bool x_enclosing = x_wide && coverage(*slot[0], 1, y_span.lo, y_span.hi) >= f &&
                             coverage(*slot[1], 1, y_span.lo, y_span.hi) >= f;
    const bool y_enclosing = y_wide && coverage(*slot[2], 0, x_span.lo, x_span.hi) >= f &&
                             coverage(*slot[3], 0, x_span.lo, x_span.hi) >= f;

    if (x_enclosing && y_enclosing) {
      RoomCandidate c;
      c.kind = RoomKind::FourWall;
      c.center = *four_wall_room_center(slot[0]->plane(), slot[1]->plane(), slot[2]->plane(), slot[3]->plane(),
                                        params.t_w);
      c.wall_ids = {slot[0]->id, slot[1]->id, slot[2]->id, slot[3]->id};
      c.source_cluster = cluster.cluster_id;
      out.push_back(std::move(c));
    } else if (x_enclosing != y_enclosing) {
      const int base = x_enclosing ? 0 : 2;
      const double spacing = room_width(slot[base]->plane(), slot[base + 1]->plane()).norm();
      const double along = x_enclosing ? cluster.y_max - cluster.y_min : cluster.x_max - cluster.x_min;
      if (along < params.two_wall_min_aspect * spacing) continue;
      RoomCandidate c;
      c.kind = x_enclosing ? RoomKind::TwoWallX : RoomKind::TwoWallY;
      c.center = two_wall_room_center(slot[base]->plane(), slot[base + 1]->plane(), cc);
      c.wall_ids = {slot[base]->id, slot[base + 1]->id};
      c.cluster_center = cc;
      c.source_cluster = cluster.cluster_id;
      out.push_back(std::move(c));
    }
  }
  return out;
}

double RoomAssociationParams::plane_mahalanobis_gate() const {
  return plane_gate_m / std::sqrt(plane_covariance(2, 2));
}

namespace {

const PlaneLandmark* find_landmark(std::span<const PlaneLandmark> landmarks, LandmarkId id) {
  for (const auto& lm : landmarks) {
    if (lm.id == id) return &lm;
  }
  return nullptr;
}

double mean_nearest_distance(const PlaneLandmark& from, const PlaneLandmark& to) {
  if (from.points_map.empty() || to.points_map.empty()) return std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& p : from.points_map) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to.points_map) best = std::min(best, (p.head<2>() - q.head<2>()).squaredNorm());
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(from.points_map.size());
}

double center_distance(const RoomCandidate& c, const MappedRoom& r) {
  switch (c.kind) {
    case RoomKind::TwoWallX: return std::abs(c.center.x() - r.center.x());
    case RoomKind::TwoWallY: return std::abs(c.center.y() - r.center.y());
    case RoomKind::FourWall: break;
  }
  return (c.center - r.center).norm();
}

}  // namespace

RoomAssociation associate_room(const RoomCandidate& candidate, std::span<const MappedRoom> rooms,
                               std::span<const PlaneLandmark> landmarks, const RoomAssociationParams& params) {
  std::vector<std::pair<double, const MappedRoom*>> shortlist;
  for (const auto& room : rooms) {
    if (room.kind != candidate.kind || room.wall_ids.size() != candidate.wall_ids.size()) continue;
    const double d = center_distance(candidate, room);
    if (d <= params.room_gate) shortlist.emplace_back(d, &room);
  }
  std::sort(shortlist.begin(), shortlist.end(), [](const auto& l, const auto& r) {
    if (l.first != r.first) return l.first < r.first;
    return l.second->room_id < r.second->room_id;
  });

  const double gate = params.plane_mahalanobis_gate();
  for (const auto& [dist, room] : shortlist) {
    std::vector<DuplicatePlanePair> dups;
    bool ok = true;
    for (std::size_t i = 0; i < candidate.wall_ids.size() && ok; ++i) {
      const LandmarkId mine = candidate.wall_ids[i];
      const LandmarkId theirs = room->wall_ids[i];
      if (mine == theirs) continue;
      const PlaneLandmark* a = find_landmark(landmarks, mine);
      const PlaneLandmark* b = find_landmark(landmarks, theirs);
      if (!a || !b || !(a->plane_class == b->plane_class)) {
        ok = false;
        break;
      }
      if (candidate.kind == RoomKind::FourWall) {
        ok = plane_mahalanobis(a->plane_map, b->plane_map, params.plane_covariance) <= gate;
      } else {
        ok = mean_nearest_distance(*a, *b) <= params.point_gate;
      }
      if (ok) dups.push_back({theirs, mine});
    }
    if (!ok) continue;
    RoomAssociation res;
    res.room_id = room->room_id;
    res.kind = dups.empty() ? RoomAssociation::Kind::Matched : RoomAssociation::Kind::MatchedWithDuplicates;
    res.duplicates = std::move(dups);
    return res;
  }
  return {};
}

bool floor_dot_check(const Plane& a, const Plane& b, const FloorParams& params) {
  const double dot = a.normal.normalized().dot(b.normal.normalized());
  if (params.gate == FloorDotGate::Literal) return std::abs(dot) < params.t_n;
  return dot <= -params.t_n;
}

namespace {

struct WidestPair {
  const PlaneLandmark* a = nullptr;
  const PlaneLandmark* b = nullptr;
  double width = -1.0;
};

WidestPair widest_pair(std::span<const PlaneLandmark> landmarks, PlaneAxis axis, const FloorParams& params) {
  WidestPair best;
  for (const auto& la : landmarks) {
    if (la.plane_class.axis != axis || la.plane_class.sign != PlaneSign::A) continue;
    for (const auto& lb : landmarks) {
      if (lb.plane_class.axis != axis || lb.plane_class.sign != PlaneSign::B) continue;
      const Plane pa = la.plane(), pb = lb.plane();
      if (!floor_dot_check(pa, pb, params)) continue;
      const double w = room_width(pa, pb).norm();
      if (w > best.width) best = {&la, &lb, w};
    }
  }
  return best;
}

}  // namespace

std::optional<FloorCandidate> segment_floor(std::span<const PlaneLandmark> landmarks, const FloorParams& params) {
  const WidestPair x = widest_pair(landmarks, PlaneAxis::X, params);
  const WidestPair y = widest_pair(landmarks, PlaneAxis::Y, params);
  if (!x.a || !y.a) return std::nullopt;
  const Vec3 r = wall_pair_midpoint(x.a->plane(), x.b->plane()) + wall_pair_midpoint(y.a->plane(), y.b->plane());
  FloorCandidate f;
  f.center = {r.x(), r.y()};
  f.bounding_wall_ids = {x.a->id, x.b->id, y.a->id, y.b->id};
  return f;
}

bool floor_update_needed(const Vec2& old_center, const Vec2& new_center, double t_f) {
  return (new_center - old_center).norm() > t_f;
}

int floor_level(double z, double level_height) {
  if (level_height <= 0.0) throw std::invalid_argument("level height must be positive");
  return static_cast<int>(std::floor(z / level_height));
}

}  // namespace sgraphs
