#include "sgraphs/free_space.hpp"
#include "sgraphs/io.hpp"
#include "sgraphs/plane_extraction.hpp"
#include "sgraphs/simulator.hpp"
#include "sgraphs/solver.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>
#include <map>

using namespace sgraphs;

namespace {

const SyntheticScene& scene(const std::string& name) {
  static std::map<std::string, SyntheticScene> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    const auto spec = read_scene_spec(std::filesystem::path(SGRAPHS_SCENES_DIR) / (name + ".json"));
    it = cache.emplace(name, generate_scene(spec)).first;
  }
  return it->second;
}

void BM_Ransac(benchmark::State& state) {
  const auto& s = scene("four_rooms");
  KeyframeCloud cloud{1, s.clouds[s.clouds.size() / 3]};
  for (auto _ : state) benchmark::DoNotOptimize(extract_planes(cloud, RansacParams{}));
  state.counters["points"] = static_cast<double>(cloud.points.size());
}
BENCHMARK(BM_Ransac)->Unit(benchmark::kMillisecond);

void BM_DistanceField(benchmark::State& state) {
  const auto& grid = scene("multi_room").grid;
  for (auto _ : state) benchmark::DoNotOptimize(build_distance_field(grid));
  state.counters["cells"] = static_cast<double>(grid.cells.size());
}
BENCHMARK(BM_DistanceField)->Unit(benchmark::kMillisecond);

void BM_Clustering(benchmark::State& state) {
  const auto& s = scene("multi_room");
  const auto field = build_distance_field(s.grid);
  const auto graph = build_free_space_graph(field, s.truth.front().translation.head<2>(), 100.0, 0.2);
  for (auto _ : state) {
    auto g = graph;
    benchmark::DoNotOptimize(cluster_free_space(g, 0.8));
  }
  state.counters["vertices"] = static_cast<double>(graph.vertices.size());
}
BENCHMARK(BM_Clustering)->Unit(benchmark::kMillisecond);

// LM from a perturbed ground-truth graph, sized by keyframe stride.
void BM_Optimize(benchmark::State& state) {
  const auto truth = ground_truth_graph(scene("four_rooms"), static_cast<int>(state.range(0)));
  auto start = truth;
  Eigen::VectorXd step(6);
  step << 0.01, -0.01, 0.02, 0.05, -0.05, 0.02;
  for (NodeId id : start.layer(NodeKind::KeyframePose)) {
    auto& n = start.node(id);
    if (!n.fixed) apply_increment(n, step);
  }
  for (auto _ : state) {
    auto g = start;
    benchmark::DoNotOptimize(optimize(g));
  }
  state.counters["factors"] = static_cast<double>(truth.factors().size());
}
BENCHMARK(BM_Optimize)->Arg(8)->Arg(4)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
