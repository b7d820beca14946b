#include "sgraphs/free_space.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

using namespace sgraphs;
using test::Rect;

namespace {

OccupancyGrid random_grid(std::mt19937_64& rng, int w, int h, double p_occ) {
  OccupancyGrid g = OccupancyGrid::filled(Vec2(-1.0, 2.0), 0.1, w, h, Cell::Free);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& c : g.cells) {
    const double r = u(rng);
    c = r < p_occ ? Cell::Occupied : r < 1.5 * p_occ ? Cell::Unknown : Cell::Free;
  }
  return g;
}

}  // namespace

TEST(Grid, CellOf) {
  const auto g = OccupancyGrid::filled(Vec2(1.0, -1.0), 0.5, 4, 2, Cell::Free);
  EXPECT_EQ(*g.cell_of(Vec2(1.01, -0.99)), Eigen::Vector2i(0, 0));
  EXPECT_EQ(*g.cell_of(Vec2(2.74, -0.2)), Eigen::Vector2i(3, 1));
  EXPECT_FALSE(g.cell_of(Vec2(0.99, 0.0)));
  EXPECT_FALSE(g.cell_of(Vec2(3.01, 0.0)));
  EXPECT_EQ(g.cell_center(1, 1), Vec2(1.75, -0.25));
}

TEST(Grid, ValidateRejectsBadShape) {
  auto g = OccupancyGrid::filled(Vec2::Zero(), 0.1, 3, 3, Cell::Free);
  g.cells.pop_back();
  EXPECT_THROW(validate(g), std::invalid_argument);
  g = OccupancyGrid::filled(Vec2::Zero(), 0.1, 3, 3, Cell::Free);
  g.resolution = 0.0;
  EXPECT_THROW(validate(g), std::invalid_argument);
}

TEST(DistanceField, MatchesBruteForce) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = random_grid(rng, 23 + trial, 17, 0.05 + 0.02 * trial);
    const auto f = build_distance_field(g);
    ASSERT_EQ(f.width, g.width);
    ASSERT_EQ(f.height, g.height);
    for (int iy = 0; iy < g.height; ++iy)
      for (int ix = 0; ix < g.width; ++ix) {
        double best = DistanceField::kInfinity;
        for (int jy = 0; jy < g.height; ++jy)
          for (int jx = 0; jx < g.width; ++jx)
            if (g.at(jx, jy) != Cell::Free)
              best = std::min(best, (g.cell_center(ix, iy) - g.cell_center(jx, jy)).norm());
        if (best == DistanceField::kInfinity)
          EXPECT_EQ(f.at(ix, iy), DistanceField::kInfinity);
        else
          EXPECT_NEAR(f.at(ix, iy), best, 1e-9) << ix << "," << iy;
      }
  }
}

TEST(DistanceField, AllFreeIsInfinite) {
  const auto f = build_distance_field(OccupancyGrid::filled(Vec2::Zero(), 0.1, 5, 4, Cell::Free));
  for (double d : f.distance) EXPECT_EQ(d, DistanceField::kInfinity);
}

TEST(DistanceField, SampleAtCellCentre) {
  std::mt19937_64 rng(12);
  const auto g = random_grid(rng, 20, 20, 0.1);
  const auto f = build_distance_field(g);
  EXPECT_NEAR(f.sample(g.cell_center(7, 9)), f.at(7, 9), 1e-12);
  // Half way between two centres on a row: mean of the two.
  const Vec2 mid = 0.5 * (g.cell_center(7, 9) + g.cell_center(8, 9));
  EXPECT_NEAR(f.sample(mid), 0.5 * (f.at(7, 9) + f.at(8, 9)), 1e-12);
}

TEST(FreeSpaceGraph, SingleRoomLattice) {
  const auto g = test::plan_grid({{0, 0, 4, 3}}, {});
  const auto f = build_distance_field(g);
  const auto graph = build_free_space_graph(f, Vec2(2, 1.5), 10.0, 0.2);
  ASSERT_FALSE(graph.empty());
  for (std::size_t i = 0; i < graph.vertices.size(); ++i) {
    const auto& v = graph.vertices[i];
    EXPECT_TRUE(Rect({0, 0, 4, 3}).contains(v.position, 0.1));
    EXPECT_GT(v.distance, 0.0);
    EXPECT_TRUE(std::is_sorted(graph.adjacency[i].begin(), graph.adjacency[i].end()));
    for (auto j : graph.adjacency[i]) {
      const double d = (graph.vertices[j].position - v.position).norm();
      EXPECT_LT(d, 0.2 * std::sqrt(2.0) + 1e-9);
      EXPECT_TRUE(std::binary_search(graph.adjacency[j].begin(), graph.adjacency[j].end(), i));
    }
  }
}

TEST(FreeSpaceGraph, KeepsOnlyRobotComponentAndRange) {
  // Two sealed rooms: only the robot's is kept.
  const auto g = test::plan_grid({{0, 0, 4, 4}, {4, 0, 8, 4}}, {});
  const auto f = build_distance_field(g);
  const auto graph = build_free_space_graph(f, Vec2(2, 2), 20.0, 0.2);
  for (const auto& v : graph.vertices) EXPECT_LT(v.position.x(), 4.0);
  const auto near = build_free_space_graph(f, Vec2(2, 2), 1.0, 0.2);
  for (const auto& v : near.vertices) EXPECT_LE((v.position - Vec2(2, 2)).norm(), 1.0 + 1e-12);
  EXPECT_LT(near.vertices.size(), graph.vertices.size());
}

TEST(FreeSpaceGraph, RejectsBadParams) {
  const auto f = build_distance_field(test::plan_grid({{0, 0, 4, 4}}, {}));
  EXPECT_THROW(build_free_space_graph(f, Vec2(2, 2), 0.0, 0.2), std::invalid_argument);
  EXPECT_THROW(build_free_space_graph(f, Vec2(2, 2), 5.0, -1.0), std::invalid_argument);
}

TEST(Clustering, MatchesTwoPhaseOracleOnRandomGraphs) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    FreeSpaceGraph g;
    const int n = 40;
    for (int i = 0; i < n; ++i) g.add_vertex({Vec2(u(rng), u(rng)), 2.0 * u(rng)});
    for (int e = 0; e < 60; ++e) {
      const auto a = static_cast<std::size_t>(u(rng) * n), b = static_cast<std::size_t>(u(rng) * n);
      if (a != b) g.add_edge(a, b);
    }
    const double t = 0.3 + u(rng);
    const auto expect = test::two_phase_labels(g, t);
    const auto clusters = cluster_free_space(g, t);
    for (int i = 0; i < n; ++i) EXPECT_EQ(g.vertices[i].cluster, expect[i]);
    const int nlabels = *std::max_element(expect.begin(), expect.end());
    ASSERT_EQ(static_cast<int>(clusters.size()), nlabels);
    for (const auto& c : clusters)
      for (auto id : c.vertex_ids) EXPECT_EQ(expect[id], c.cluster_id);
  }
}

TEST(Clustering, EndpointsAndCentre) {
  FreeSpaceGraph g;
  g.add_vertex({Vec2(0, 0), 1.0});
  g.add_vertex({Vec2(3, 1), 1.0});
  g.add_vertex({Vec2(1, 4), 1.0});
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  const auto cl = cluster_free_space(g, 0.5);
  ASSERT_EQ(cl.size(), 1u);
  EXPECT_EQ(cl[0].x_min, 0.0);
  EXPECT_EQ(cl[0].x_max, 3.0);
  EXPECT_EQ(cl[0].y_min, 0.0);
  EXPECT_EQ(cl[0].y_max, 4.0);
  EXPECT_EQ(cl[0].center(), Vec2(1.5, 2.0));
}

TEST(Clustering, DoorSplitsRooms) {
  const std::vector<Rect> rooms{{0, 0, 5, 4}, {5, 0, 10, 4}};
  const auto g = test::plan_grid(rooms, {{4.7, 1.5, 5.3, 2.5}});
  const auto f = build_distance_field(g);
  auto graph = build_free_space_graph(f, Vec2(2.5, 2), 30.0, 0.2);
  const auto cl = cluster_free_space(graph, 0.8);
  ASSERT_EQ(cl.size(), 2u);
  for (const auto& c : cl) {
    const auto mid = c.center();
    int inside = 0;
    for (const auto& r : rooms) inside += r.contains(mid) ? 1 : 0;
    EXPECT_EQ(inside, 1);
  }
  // Without the door threshold everything is one cluster.
  EXPECT_EQ(cluster_free_space(graph, 0.0).size(), 1u);
}

TEST(Clustering, NegativeThresholdThrows) {
  FreeSpaceGraph g;
  EXPECT_THROW(cluster_free_space(g, -0.1), std::invalid_argument);
}

TEST(DriftCorrection, RigidMotion) {
  std::mt19937_64 rng(14);
  const auto grid = test::plan_grid({{0, 0, 4, 3}}, {});
  const auto graph = build_free_space_graph(build_distance_field(grid), Vec2(2, 1.5), 10, 0.2);
  const Pose3 drift = Pose3::from_yaw(0.3, Vec3(1.0, -2.0, 0.5));
  const auto moved = apply_drift_correction(graph, drift);
  ASSERT_EQ(moved.vertices.size(), graph.vertices.size());
  EXPECT_EQ(moved.adjacency, graph.adjacency);
  const Eigen::Rotation2Dd R(0.3);
  for (std::size_t i = 0; i < graph.vertices.size(); ++i) {
    const Vec2 expect = R * graph.vertices[i].position + Vec2(1.0, -2.0);
    EXPECT_LT((moved.vertices[i].position - expect).norm(), 1e-12);
    EXPECT_EQ(moved.vertices[i].distance, graph.vertices[i].distance);
  }
}

TEST(IntegrateScan, RayFreesAndEndOccupies) {
  auto g = OccupancyGrid::filled(Vec2::Zero(), 0.1, 60, 30, Cell::Unknown);
  const Pose3 pose = Pose3::from_yaw(0.0, Vec3(1.05, 1.05, 0.0));
  const std::vector<Vec3> pts{{3.0, 0.0, 1.0}, {0.0, 1.0, 5.0}};  // second one above z_max
  integrate_scan(g, pose, pts, 0.2, 2.2);
  EXPECT_EQ(g.at(40, 10), Cell::Occupied);
  for (int ix = 11; ix < 40; ++ix) EXPECT_EQ(g.at(ix, 10), Cell::Free) << ix;
  EXPECT_EQ(g.at(10, 20), Cell::Unknown);
  // A later ray does not clear an occupied cell.
  integrate_scan(g, Pose3::from_yaw(0.0, Vec3(0.55, 1.05, 0.0)), std::vector<Vec3>{{4.0, 0.0, 1.0}}, 0.2, 2.2);
  EXPECT_EQ(g.at(40, 10), Cell::Occupied);
  EXPECT_EQ(g.at(45, 10), Cell::Occupied);
}
