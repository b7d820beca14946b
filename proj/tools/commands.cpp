#include "commands.hpp"

#include "json.hpp"
#include "sgraphs/config.hpp"
#include "sgraphs/evaluation.hpp"
#include "sgraphs/graph_io.hpp"
#include "sgraphs/io.hpp"
#include "sgraphs/pipeline.hpp"
#include "sgraphs/simulator.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace sgraphs::cli {

using nlohmann::json;

namespace {

std::string cloud_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cloud_%06zu.ply", k);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw InputError(path.string() + ": missing");
}

std::string num(double v) { return format_number(v); }

SensorLog read_scene_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError(dir.string() + ": not a directory");
  require_file(dir / "odometry.tum");
  const Trajectory odom = read_tum(dir / "odometry.tum");
  SensorLog log;
  for (std::size_t k = 0; k < odom.size(); ++k) {
    const fs::path cloud = dir / "clouds" / cloud_name(k);
    require_file(cloud);
    log.timestamps.push_back(odom[k].timestamp);
    log.odometry.push_back(odom[k].pose);
    log.clouds.push_back(read_ply(cloud));
  }
  if (log.timestamps.empty()) throw InputError((dir / "odometry.tum").string() + ": no poses");
  return log;
}

std::vector<DetectedRoom> read_detected_rooms(const fs::path& path) {
  const json j = read_json(path);
  std::vector<DetectedRoom> out;
  try {
    for (const auto& r : j.at("layers").at("rooms")) {
      const std::string kind = r.at("kind").get<std::string>();
      DetectedRoom d;
      if (kind == "four_wall") d.kind = RoomKind::FourWall;
      else if (kind == "two_wall_x") d.kind = RoomKind::TwoWallX;
      else if (kind == "two_wall_y") d.kind = RoomKind::TwoWallY;
      else throw InputError(path.string() + ": unknown room kind '" + kind + "'");
      d.center = Vec2(r.at("center").at(0).get<double>(), r.at("center").at(1).get<double>());
      out.push_back(d);
    }
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return out;
}

json counts_json(const PrCounts& c) {
  return {{"true_positives", c.true_positives},
          {"false_positives", c.false_positives},
          {"false_negatives", c.false_negatives},
          {"precision", c.precision()},
          {"recall", c.recall()}};
}

}  // namespace

int cmd_generate(const GenerateArgs& args) {
  SceneSpec spec = read_scene_spec(args.scene_file);
  if (args.seed) {
    if (*args.seed < 0) throw InputError("--seed: must be >= 0");
    spec.noise.seed = static_cast<std::uint64_t>(*args.seed);
  }
  SyntheticScene scene;
  try {
    scene = generate_scene(spec);
  } catch (const std::invalid_argument& e) {
    throw InputError(args.scene_file.string() + ": " + e.what());
  }

  fs::create_directories(args.out / "clouds");
  write_text(args.out / "scene.json", scene_spec_to_json(spec));
  Trajectory truth, odom;
  for (std::size_t k = 0; k < scene.timestamps.size(); ++k) {
    truth.push_back({scene.timestamps[k], scene.truth[k]});
    odom.push_back({scene.timestamps[k], scene.odometry[k]});
  }
  write_tum(args.out / "truth.tum", truth);
  write_tum(args.out / "odometry.tum", odom);
  std::size_t points = 0;
  for (std::size_t k = 0; k < scene.clouds.size(); ++k) {
    write_ply(args.out / "clouds" / cloud_name(k), scene.clouds[k]);
    points += scene.clouds[k].size();
  }
  write_pgm(args.out / "grid.pgm", scene.grid);
  write_ground_truth(args.out / "ground_truth.json", scene);

  std::cout << "scene " << spec.name << ": " << scene.timestamps.size() << " samples, " << points << " points, "
            << scene.truth_planes.size() << " wall planes, " << scene.truth_rooms.size() << " rooms\n";
  return 0;
}

int cmd_run(const RunArgs& args) {
  PipelineConfig config = args.config ? read_config(*args.config) : PipelineConfig{};
  if (args.seed) {
    if (*args.seed < 0) throw InputError("--seed: must be >= 0");
    config.ransac.seed = static_cast<std::uint64_t>(*args.seed);
  }
  if (args.optimize_every) config.solver.optimize_every = *args.optimize_every;
  validate(config);

  const SensorLog log = read_scene_dir(args.scene_dir);
  const PipelineResult result = run_pipeline(log, config);

  fs::create_directories(args.out);
  write_text(args.out / "config.json", config_to_json(config));
  write_graph(args.out / "graph.json", result.graph);
  write_text(args.out / "scene_graph.json", scene_graph_json(result));
  write_tum(args.out / "trajectory.tum", estimated_trajectory(result));
  write_tum(args.out / "odometry.tum", odometry_trajectory(result));
  const auto cloud = map_cloud(result);
  write_ply(args.out / "map.ply", cloud);

  std::vector<std::vector<std::string>> rows;
  for (const auto& row : timing_report(result.timing)) {
    rows.push_back({row.stage, std::to_string(row.count), row.mean_ms ? num(*row.mean_ms) : "n/a"});
  }
  write_csv(args.out / "timing.csv", {"stage", "count", "mean_ms"}, rows);

  rows.clear();
  for (const auto& stage : timing_stages()) {
    const auto& s = result.timing.samples(stage);
    for (std::size_t i = 0; i < s.size(); ++i) rows.push_back({stage, std::to_string(i), num(s[i])});
  }
  write_csv(args.out / "timing_samples.csv", {"stage", "index", "ms"}, rows);

  json solver = json::array();
  for (std::size_t i = 0; i < result.solver_reports.size(); ++i) {
    const auto& rep = result.solver_reports[i];
    solver.push_back({{"factors", result.solver_factor_counts[i]},
                      {"iterations", rep.iterations},
                      {"initial_cost", rep.initial_cost},
                      {"final_cost", rep.final_cost},
                      {"converged", rep.converged},
                      {"termination", std::string(to_string(rep.termination))},
                      {"cost_history", rep.cost_history}});
  }
  write_text(args.out / "solver.json", solver.dump(1));

  json clusters = json::array();
  for (const auto& c : result.last_clusters) {
    json pts = json::array();
    for (const auto& p : c.positions) pts.push_back({p.x(), p.y()});
    clusters.push_back({{"cluster_id", c.cluster_id}, {"center", {c.center().x(), c.center().y()}}, {"vertices", pts}});
  }
  write_text(args.out / "clusters.json", clusters.dump(1));

  std::size_t four = 0;
  for (const auto& r : result.rooms) four += r.kind == RoomKind::FourWall;
  std::cout << "keyframes " << result.keyframes.size() << ", walls " << result.walls.size() << ", rooms "
            << result.rooms.size() << " (" << four << " four-wall), floor " << (result.floor ? "yes" : "no")
            << ", duplicates " << result.duplicates.size() << ", factors " << result.graph.factors().size() << '\n';
  return 0;
}

int cmd_eval(const EvalArgs& args) {
  for (const char* f : {"trajectory.tum", "odometry.tum", "scene_graph.json", "map.ply"}) require_file(args.run_dir / f);
  for (const char* f : {"truth.tum", "ground_truth.json", "scene.json"}) require_file(args.truth_dir / f);

  const Trajectory truth = read_tum(args.truth_dir / "truth.tum");
  const Trajectory est = read_tum(args.run_dir / "trajectory.tum");
  const Trajectory odom = read_tum(args.run_dir / "odometry.tum");
  AteReport ours, base;
  try {
    ours = ate(est, truth);
    base = ate(odom, truth);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("ate: ") + e.what());
  }
  // Undefined when odometry is already exact.
  const bool has_improvement = base.rmse > 0.0;
  const double improvement = has_improvement ? percentage_improvement(base.rmse, ours.rmse) : 0.0;

  const SceneSpec spec = read_scene_spec(args.truth_dir / "scene.json");
  const auto truth_map = wall_surface_points(spec.floorplan, spec.sensor);
  const auto est_map = read_ply(args.run_dir / "map.ply");
  MapRmseReport map;
  if (!est_map.empty()) map = map_rmse(est_map, truth_map);

  const auto detected = read_detected_rooms(args.run_dir / "scene_graph.json");
  const auto truth_rooms = read_truth_rooms(args.truth_dir / "ground_truth.json");
  const PrReport pr = room_pr(detected, truth_rooms);

  const fs::path out = args.out.value_or(args.run_dir);
  fs::create_directories(out);
  const auto& a = ours.alignment;
  write_text(out / "ate.json",
             json{{"rmse", ours.rmse},
                  {"errors", ours.errors},
                  {"alignment",
                   {{"translation", {a.translation.x(), a.translation.y(), a.translation.z()}},
                    {"rotation", {a.rotation.w(), a.rotation.x(), a.rotation.y(), a.rotation.z()}}}},
                  {"odometry_rmse", base.rmse},
                  {"improvement_percent", has_improvement ? json(improvement) : json(nullptr)}}
                 .dump(1));
  write_text(out / "map_rmse.json", json{{"rmse", map.rmse ? json(*map.rmse) : json(nullptr)},
                                         {"matched_fraction", map.matched_fraction},
                                         {"points", est_map.size()}}
                                        .dump(1));
  json matches = json::array();
  for (const auto& m : pr.matches) matches.push_back({{"detected", m.detected}, {"truth", m.truth}, {"distance", m.distance}});
  write_text(out / "room_pr.json", json{{"four_wall", counts_json(pr.four_wall)},
                                        {"two_wall", counts_json(pr.two_wall)},
                                        {"overall", counts_json(pr.overall)},
                                        {"matches", matches}}
                                       .dump(1));

  std::vector<std::vector<std::string>> rows{
      {"ate_rmse", num(ours.rmse)},
      {"odometry_ate_rmse", num(base.rmse)},
      {"improvement_percent", has_improvement ? num(improvement) : "n/a"},
      {"map_rmse", map.rmse ? num(*map.rmse) : "n/a"},
      {"map_matched_fraction", num(map.matched_fraction)},
      {"room_precision", num(pr.overall.precision())},
      {"room_recall", num(pr.overall.recall())},
      {"four_wall_precision", num(pr.four_wall.precision())},
      {"four_wall_recall", num(pr.four_wall.recall())},
      {"two_wall_precision", num(pr.two_wall.precision())},
      {"two_wall_recall", num(pr.two_wall.recall())},
  };
  write_csv(out / "metrics.csv", {"metric", "value"}, rows);

  std::cout << "ate " << num(ours.rmse) << " m (odometry " << num(base.rmse) << " m";
  if (has_improvement) std::cout << ", " << num(improvement) << "% better";
  std::cout << "), map rmse " << (map.rmse ? num(*map.rmse) : "n/a") << ", rooms P " << num(pr.overall.precision())
            << " R " << num(pr.overall.recall()) << '\n';
  return 0;
}

int cmd_export_plot(const ExportPlotArgs& args) {
  for (const char* f : {"scene_graph.json", "trajectory.tum", "odometry.tum", "solver.json", "clusters.json"}) {
    require_file(args.run_dir / f);
  }
  const fs::path out = args.out.value_or(args.run_dir / "plot");
  fs::create_directories(out);

  const json sg = read_json(args.run_dir / "scene_graph.json");
  std::vector<std::vector<std::string>> rows;
  try {
    const auto& layers = sg.at("layers");
    for (const auto& k : layers.at("keyframes")) {
      const auto& t = k.at("translation");
      const auto& q = k.at("rotation");
      const Eigen::Quaterniond quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                    q.at(3).get<double>());
      rows.push_back({std::to_string(k.at("id").get<int>()), num(t.at(0).get<double>()), num(t.at(1).get<double>()),
                      num(t.at(2).get<double>()), num(Pose3{quat.normalized(), Vec3::Zero()}.yaw())});
    }
    write_csv(out / "keyframes.csv", {"id", "x", "y", "z", "yaw"}, rows);

    rows.clear();
    for (const auto& w : layers.at("walls")) {
      const auto& n = w.at("normal");
      rows.push_back({std::to_string(w.at("id").get<int>()), w.at("class").get<std::string>(),
                      num(n.at(0).get<double>()), num(n.at(1).get<double>()), num(n.at(2).get<double>()),
                      num(w.at("distance").get<double>())});
    }
    write_csv(out / "walls.csv", {"id", "class", "nx", "ny", "nz", "d"}, rows);

    rows.clear();
    for (const auto& r : layers.at("rooms")) {
      rows.push_back({std::to_string(r.at("id").get<int>()), r.at("kind").get<std::string>(),
                      num(r.at("center").at(0).get<double>()), num(r.at("center").at(1).get<double>())});
    }
    write_csv(out / "rooms.csv", {"id", "kind", "x", "y"}, rows);

    rows.clear();
    for (const auto& f : layers.at("floors")) {
      rows.push_back({std::to_string(f.at("id").get<int>()), num(f.at("center").at(0).get<double>()),
                      num(f.at("center").at(1).get<double>())});
    }
    write_csv(out / "floors.csv", {"id", "x", "y"}, rows);
  } catch (const json::exception& e) {
    throw InputError((args.run_dir / "scene_graph.json").string() + ": " + e.what());
  }

  rows.clear();
  const Trajectory est = read_tum(args.run_dir / "trajectory.tum");
  const Trajectory odom = read_tum(args.run_dir / "odometry.tum");
  for (std::size_t i = 0; i < est.size(); ++i) {
    const Vec3& p = est[i].pose.translation;
    std::vector<std::string> row{num(est[i].timestamp), num(p.x()), num(p.y()), num(p.z())};
    if (i < odom.size()) {
      const Vec3& o = odom[i].pose.translation;
      row.insert(row.end(), {num(o.x()), num(o.y()), num(o.z())});
    } else {
      row.insert(row.end(), {"", "", ""});
    }
    rows.push_back(std::move(row));
  }
  write_csv(out / "trajectory.csv", {"timestamp", "x", "y", "z", "odom_x", "odom_y", "odom_z"}, rows);

  rows.clear();
  try {
    for (const auto& c : read_json(args.run_dir / "clusters.json")) {
      const std::string id = std::to_string(c.at("cluster_id").get<int>());
      for (const auto& v : c.at("vertices")) {
        rows.push_back({id, num(v.at(0).get<double>()), num(v.at(1).get<double>())});
      }
    }
  } catch (const json::exception& e) {
    throw InputError((args.run_dir / "clusters.json").string() + ": " + e.what());
  }
  write_csv(out / "clusters.csv", {"cluster_id", "x", "y"}, rows);

  rows.clear();
  try {
    int opt = 0;
    for (const auto& rep : read_json(args.run_dir / "solver.json")) {
      int it = 0;
      for (const auto& c : rep.at("cost_history")) {
        rows.push_back({std::to_string(opt), std::to_string(it++), num(c.get<double>())});
      }
      ++opt;
    }
  } catch (const json::exception& e) {
    throw InputError((args.run_dir / "solver.json").string() + ": " + e.what());
  }
  write_csv(out / "residuals.csv", {"optimization", "step", "cost"}, rows);

  std::cout << "wrote plot series to " << out.string() << '\n';
  return 0;
}

}  // namespace sgraphs::cli
