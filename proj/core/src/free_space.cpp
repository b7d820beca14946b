#include "sgraphs/free_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgraphs {

OccupancyGrid OccupancyGrid::filled(const Vec2& origin, double resolution, int width, int height, Cell value) {
  OccupancyGrid g;
  g.origin = origin;
  g.resolution = resolution;
  g.width = width;
  g.height = height;
  g.cells.assign(static_cast<std::size_t>(width) * height, value);
  return g;
}

std::optional<Eigen::Vector2i> OccupancyGrid::cell_of(const Vec2& p) const {
  const int ix = static_cast<int>(std::floor((p.x() - origin.x()) / resolution));
  const int iy = static_cast<int>(std::floor((p.y() - origin.y()) / resolution));
  if (!contains(ix, iy)) return std::nullopt;
  return Eigen::Vector2i(ix, iy);
}

void validate(const OccupancyGrid& grid) {
  if (!(grid.resolution > 0.0)) throw std::invalid_argument("occupancy grid: resolution must be > 0");
  if (grid.width < 0 || grid.height < 0) throw std::invalid_argument("occupancy grid: negative size");
  if (grid.cells.size() != static_cast<std::size_t>(grid.width) * grid.height) {
    throw std::invalid_argument("occupancy grid: cell count does not match width*height");
  }
}

std::optional<Eigen::Vector2i> DistanceField::cell_of(const Vec2& p) const {
  const int ix = static_cast<int>(std::floor((p.x() - origin.x()) / resolution));
  const int iy = static_cast<int>(std::floor((p.y() - origin.y()) / resolution));
  if (ix < 0 || iy < 0 || ix >= width || iy >= height) return std::nullopt;
  return Eigen::Vector2i(ix, iy);
}

double DistanceField::sample(const Vec2& p) const {
  const auto cell = cell_of(p);
  if (!cell) return 0.0;
  const double fx = (p.x() - origin.x()) / resolution - 0.5;
  const double fy = (p.y() - origin.y()) / resolution - 0.5;
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double tx = fx - x0;
  const double ty = fy - y0;
  double v[2][2];
  for (int dy = 0; dy < 2; ++dy) {
    for (int dx = 0; dx < 2; ++dx) {
      const int cx = x0 + dx;
      const int cy = y0 + dy;
      if (cx < 0 || cy < 0 || cx >= width || cy >= height) return at(cell->x(), cell->y());
      v[dy][dx] = at(cx, cy);
      if (v[dy][dx] == kInfinity) return at(cell->x(), cell->y());
    }
  }
  const double bottom = (1.0 - tx) * v[0][0] + tx * v[0][1];
  const double top = (1.0 - tx) * v[1][0] + tx * v[1][1];
  return (1.0 - ty) * bottom + ty * top;
}

namespace {

// 1-D squared distance transform of a sampled function (lower envelope of parabolas).
void distance_transform_1d(const std::vector<double>& f, std::vector<double>& out, std::vector<int>& v,
                           std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (f[v[k]] == kInf) {
      v[k] = q;
      continue;
    }
    double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (f[v[0]] == kInf) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double d = q - v[k];
    out[q] = d * d + f[v[k]];
  }
}

}  // namespace

DistanceField build_distance_field(const OccupancyGrid& grid) {
  validate(grid);
  DistanceField field;
  field.origin = grid.origin;
  field.resolution = grid.resolution;
  field.width = grid.width;
  field.height = grid.height;
  const std::size_t count = grid.cells.size();
  field.distance.assign(count, DistanceField::kInfinity);
  if (count == 0) return field;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> sq(count);
  bool any_obstacle = false;
  for (std::size_t i = 0; i < count; ++i) {
    const bool obstacle = grid.cells[i] != Cell::Free;
    any_obstacle |= obstacle;
    sq[i] = obstacle ? 0.0 : kInf;
  }
  if (!any_obstacle) return field;

  const int w = grid.width;
  const int h = grid.height;
  const int longest = std::max(w, h);
  std::vector<double> f(longest), out(longest), z(longest + 1);
  std::vector<int> v(longest);

  f.resize(h);
  out.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = sq[static_cast<std::size_t>(y) * w + x];
    distance_transform_1d(f, out, v, z);
    for (int y = 0; y < h; ++y) sq[static_cast<std::size_t>(y) * w + x] = out[y];
  }
  f.resize(w);
  out.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = sq[static_cast<std::size_t>(y) * w + x];
    distance_transform_1d(f, out, v, z);
    for (int x = 0; x < w; ++x) sq[static_cast<std::size_t>(y) * w + x] = out[x];
  }
  for (std::size_t i = 0; i < count; ++i) field.distance[i] = std::sqrt(sq[i]) * grid.resolution;
  return field;
}

std::size_t FreeSpaceGraph::add_vertex(const FreeSpaceVertex& v) {
  vertices.push_back(v);
  adjacency.emplace_back();
  return vertices.size() - 1;
}

void FreeSpaceGraph::add_edge(std::size_t a, std::size_t b) {
  if (a == b) return;
  auto insert_sorted = [](std::vector<std::size_t>& list, std::size_t value) {
    auto it = std::lower_bound(list.begin(), list.end(), value);
    if (it == list.end() || *it != value) list.insert(it, value);
  };
  insert_sorted(adjacency.at(a), b);
  insert_sorted(adjacency.at(b), a);
}

std::size_t FreeSpaceGraph::edge_count() const {
  std::size_t total = 0;
  for (const auto& list : adjacency) total += list.size();
  return total / 2;
}

namespace {

bool segment_is_free(const DistanceField& field, const Vec2& a, const Vec2& b) {
  const double len = (b - a).norm();
  const int steps = std::max(1, static_cast<int>(std::ceil(len / (0.25 * field.resolution))));
  for (int i = 0; i <= steps; ++i) {
    const Vec2 p = a + (b - a) * (static_cast<double>(i) / steps);
    const auto cell = field.cell_of(p);
    if (!cell || !field.is_free(cell->x(), cell->y())) return false;
  }
  return true;
}

}  // namespace

FreeSpaceGraph build_free_space_graph(const DistanceField& field, const Vec2& robot_position, double t_r,
                                      double vertex_spacing) {
  if (!(t_r > 0.0)) throw std::invalid_argument("free-space graph: t_r must be > 0");
  if (!(vertex_spacing > 0.0)) throw std::invalid_argument("free-space graph: vertex spacing must be > 0");
  FreeSpaceGraph lattice_graph;
  if (field.width == 0 || field.height == 0) return lattice_graph;

  const Vec2 first = field.origin + Vec2::Constant(0.5 * field.resolution);
  const double extent_x = field.width * field.resolution - 0.5 * field.resolution;
  const double extent_y = field.height * field.resolution - 0.5 * field.resolution;
  const int nx = static_cast<int>(std::floor(extent_x / vertex_spacing + 1e-9)) + 1;
  const int ny = static_cast<int>(std::floor(extent_y / vertex_spacing + 1e-9)) + 1;

  std::vector<long> index(static_cast<std::size_t>(nx) * ny, -1);
  for (int ky = 0; ky < ny; ++ky) {
    for (int kx = 0; kx < nx; ++kx) {
      const Vec2 p = first + Vec2(kx * vertex_spacing, ky * vertex_spacing);
      if ((p - robot_position).norm() > t_r) continue;
      const auto cell = field.cell_of(p);
      if (!cell || !field.is_free(cell->x(), cell->y())) continue;
      FreeSpaceVertex v;
      v.position = p;
      v.distance = field.sample(p);
      index[static_cast<std::size_t>(ky) * nx + kx] = static_cast<long>(lattice_graph.add_vertex(v));
    }
  }
  constexpr int kOffsets[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  for (int ky = 0; ky < ny; ++ky) {
    for (int kx = 0; kx < nx; ++kx) {
      const long a = index[static_cast<std::size_t>(ky) * nx + kx];
      if (a < 0) continue;
      for (const auto& off : kOffsets) {
        const int bx = kx + off[0];
        const int by = ky + off[1];
        if (bx < 0 || by < 0 || bx >= nx || by >= ny) continue;
        const long b = index[static_cast<std::size_t>(by) * nx + bx];
        if (b < 0) continue;
        if (segment_is_free(field, lattice_graph.vertices[a].position, lattice_graph.vertices[b].position)) {
          lattice_graph.add_edge(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
        }
      }
    }
  }
  if (lattice_graph.empty()) return lattice_graph;

  // Keep the component reachable from the vertex nearest the robot.
  std::size_t seed = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lattice_graph.vertices.size(); ++i) {
    const double d = (lattice_graph.vertices[i].position - robot_position).squaredNorm();
    if (d < best) {
      best = d;
      seed = i;
    }
  }
  std::vector<char> reached(lattice_graph.vertices.size(), 0);
  std::vector<std::size_t> stack{seed};
  reached[seed] = 1;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t w : lattice_graph.adjacency[u]) {
      if (!reached[w]) {
        reached[w] = 1;
        stack.push_back(w);
      }
    }
  }
  FreeSpaceGraph graph;
  std::vector<long> remap(lattice_graph.vertices.size(), -1);
  for (std::size_t i = 0; i < lattice_graph.vertices.size(); ++i) {
    if (reached[i]) remap[i] = static_cast<long>(graph.add_vertex(lattice_graph.vertices[i]));
  }
  for (std::size_t i = 0; i < lattice_graph.vertices.size(); ++i) {
    if (remap[i] < 0) continue;
    for (std::size_t j : lattice_graph.adjacency[i]) {
      if (j > i && remap[j] >= 0) graph.add_edge(static_cast<std::size_t>(remap[i]), static_cast<std::size_t>(remap[j]));
    }
  }
  return graph;
}

Vec2 FreeSpaceCluster::center() const {
  return {0.5 * (x_max - x_min) + x_min, 0.5 * (y_max - y_min) + y_min};
}

std::vector<FreeSpaceCluster> cluster_free_space(FreeSpaceGraph& graph, double t_lambda) {
  if (!(t_lambda >= 0.0)) throw std::invalid_argument("free-space clustering: t_lambda must be >= 0");
  const std::size_t n = graph.vertices.size();
  std::vector<char> kept(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& v = graph.vertices[i];
    kept[i] = v.distance >= t_lambda ? 1 : 0;
    v.visited = false;
    v.cluster = 0;
  }

  // Step 2: connected components of the filtered graph.
  int next_cluster = 0;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (!kept[i] || graph.vertices[i].visited) continue;
    ++next_cluster;
    graph.vertices[i].visited = true;
    graph.vertices[i].cluster = next_cluster;
    stack.assign(1, i);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t w : graph.adjacency[u]) {
        if (!kept[w] || graph.vertices[w].visited) continue;
        graph.vertices[w].visited = true;
        graph.vertices[w].cluster = next_cluster;
        stack.push_back(w);
      }
    }
  }

  // Step 3: re-attach deleted vertices to the cluster of their first kept neighbour.
  for (std::size_t i = 0; i < n; ++i) {
    if (kept[i]) continue;
    for (std::size_t w : graph.adjacency[i]) {
      if (kept[w] && graph.vertices[w].cluster > 0) {
        graph.vertices[i].cluster = graph.vertices[w].cluster;
        break;
      }
    }
  }

  std::vector<FreeSpaceCluster> clusters(static_cast<std::size_t>(next_cluster));
  for (int c = 0; c < next_cluster; ++c) clusters[c].cluster_id = c + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = graph.vertices[i].cluster;
    if (c <= 0) continue;
    auto& cl = clusters[static_cast<std::size_t>(c - 1)];
    const Vec2& p = graph.vertices[i].position;
    if (cl.vertex_ids.empty()) {
      cl.x_min = cl.x_max = p.x();
      cl.y_min = cl.y_max = p.y();
    } else {
      cl.x_min = std::min(cl.x_min, p.x());
      cl.x_max = std::max(cl.x_max, p.x());
      cl.y_min = std::min(cl.y_min, p.y());
      cl.y_max = std::max(cl.y_max, p.y());
    }
    cl.vertex_ids.push_back(i);
    cl.positions.push_back(p);
  }
  return clusters;
}

FreeSpaceGraph apply_drift_correction(const FreeSpaceGraph& graph, const Pose3& drift) {
  const double yaw = drift.yaw();
  const Eigen::Rotation2Dd rot(yaw);
  const Vec2 shift = drift.translation.head<2>();
  FreeSpaceGraph out = graph;
  for (auto& v : out.vertices) v.position = rot * v.position + shift;
  return out;
}

void integrate_scan(OccupancyGrid& grid, const Pose3& pose, std::span<const Vec3> points_body, double z_min,
                    double z_max) {
  const Vec2 origin = pose.translation.head<2>();
  const auto start = grid.cell_of(origin);
  std::vector<Eigen::Vector2i> hits;
  hits.reserve(points_body.size());
  const double step = 0.5 * grid.resolution;
  for (const auto& pb : points_body) {
    const Vec3 pm = pose.transform_point(pb);
    if (pm.z() < z_min || pm.z() > z_max) continue;
    const Vec2 end = pm.head<2>();
    const auto end_cell = grid.cell_of(end);
    if (start) {
      const Vec2 dir = end - origin;
      const double len = dir.norm();
      const int steps = static_cast<int>(len / step);
      for (int i = 0; i < steps; ++i) {
        const auto c = grid.cell_of(origin + dir * (i * step / len));
        if (!c) break;
        if (end_cell && *c == *end_cell) break;
        Cell& cell = grid.at(c->x(), c->y());
        if (cell != Cell::Occupied) cell = Cell::Free;
      }
    }
    if (end_cell) hits.push_back(*end_cell);
  }
  for (const auto& c : hits) grid.at(c.x(), c.y()) = Cell::Occupied;
}

}  // namespace sgraphs
