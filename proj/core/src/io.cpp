#include "sgraphs/io.hpp"

#include "json.hpp"
#include "json_reader.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cctype>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace sgraphs {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw InputError(path.string() + ": cannot open for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(where + ": invalid JSON: " + e.what());
  }
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_tum(const std::filesystem::path& path, const Trajectory& traj) {
  auto out = open_out(path);
  for (const auto& s : traj) {
    const auto& t = s.pose.translation;
    const auto& q = s.pose.rotation;
    out << format_number(s.timestamp) << ' ' << format_number(t.x()) << ' ' << format_number(t.y()) << ' '
        << format_number(t.z()) << ' ' << format_number(q.x()) << ' ' << format_number(q.y()) << ' '
        << format_number(q.z()) << ' ' << format_number(q.w()) << '\n';
  }
}

Trajectory read_tum(const std::filesystem::path& path) {
  auto in = open_in(path);
  Trajectory traj;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double v[8];
    for (double& x : v) {
      if (!(ls >> x)) throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 8 numbers");
    }
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (q.norm() < 1e-9) throw InputError(path.string() + ":" + std::to_string(lineno) + ": zero quaternion");
    traj.push_back({v[0], Pose3::from_rotation_translation(q.normalized(), Vec3(v[1], v[2], v[3]))});
  }
  return traj;
}

void write_ply(const std::filesystem::path& path, std::span<const Vec3> points) {
  auto out = open_out(path);
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (const auto& p : points) {
    out << format_number(p.x()) << ' ' << format_number(p.y()) << ' ' << format_number(p.z()) << '\n';
  }
}

std::vector<Vec3> read_ply(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    return InputError(path.string() + ":" + std::to_string(lineno) + ": " + what);
  };
  if (!std::getline(in, line) || line != "ply") throw fail("missing 'ply' magic");
  ++lineno;
  std::size_t count = 0;
  std::vector<std::string> props;
  bool ascii = false;
  bool in_vertex = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
    } else if (word == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ls >> count;
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  if (!ascii) throw fail("only ascii PLY is supported");
  auto idx = [&](const std::string& n) -> std::size_t {
    auto it = std::find(props.begin(), props.end(), n);
    if (it == props.end()) throw fail("vertex property '" + n + "' missing");
    return static_cast<std::size_t>(it - props.begin());
  };
  const std::size_t ix = idx("x"), iy = idx("y"), iz = idx("z");
  std::vector<Vec3> pts;
  pts.reserve(count);
  std::vector<double> vals(props.size());
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw fail("expected " + std::to_string(count) + " vertices");
    ++lineno;
    std::istringstream ls(line);
    for (double& v : vals) {
      if (!(ls >> v)) throw fail("malformed vertex");
    }
    pts.emplace_back(vals[ix], vals[iy], vals[iz]);
  }
  return pts;
}

std::vector<Vec3> read_points_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<Vec3> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z)) {
      if (lineno == 1) continue;  // header
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected x,y,z");
    }
    pts.emplace_back(x, y, z);
  }
  return pts;
}

std::vector<Vec3> read_points(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ply") return read_ply(path);
  if (ext == ".csv") return read_points_csv(path);
  throw InputError(path.string() + ": unsupported point cloud extension '" + ext + "'");
}

namespace {

constexpr unsigned char kFreePixel = 254;
constexpr unsigned char kOccupiedPixel = 0;
constexpr unsigned char kUnknownPixel = 205;

std::filesystem::path sidecar(const std::filesystem::path& path) { return path.string() + ".json"; }

}  // namespace

void write_pgm(const std::filesystem::path& path, const OccupancyGrid& grid) {
  validate(grid);
  {
    auto out = open_out(path, true);
    out << "P5\n" << grid.width << ' ' << grid.height << "\n255\n";
    for (int iy = grid.height - 1; iy >= 0; --iy) {
      for (int ix = 0; ix < grid.width; ++ix) {
        const Cell c = grid.at(ix, iy);
        const unsigned char px = c == Cell::Free ? kFreePixel : c == Cell::Occupied ? kOccupiedPixel : kUnknownPixel;
        out.put(static_cast<char>(px));
      }
    }
  }
  json meta{{"origin", {grid.origin.x(), grid.origin.y()}},
            {"resolution", grid.resolution},
            {"free_thresh", 0.196},
            {"occupied_thresh", 0.65}};
  auto out = open_out(sidecar(path));
  out << meta.dump(2) << '\n';
}

OccupancyGrid read_pgm(const std::filesystem::path& path) {
  const json meta = parse_json(read_text(sidecar(path)), sidecar(path).string());
  OccupancyGrid grid;
  double free_thresh = 0.196, occ_thresh = 0.65;
  try {
    grid.origin = Vec2(meta.at("origin").at(0).get<double>(), meta.at("origin").at(1).get<double>());
    grid.resolution = meta.at("resolution").get<double>();
    if (meta.contains("free_thresh")) free_thresh = meta["free_thresh"].get<double>();
    if (meta.contains("occupied_thresh")) occ_thresh = meta["occupied_thresh"].get<double>();
  } catch (const json::exception& e) {
    throw InputError(sidecar(path).string() + ": " + e.what());
  }

  auto in = open_in(path, true);
  auto token = [&]() {
    std::string t;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(c);
    }
    return t;
  };
  const std::string magic = token();
  if (magic != "P2" && magic != "P5") throw InputError(path.string() + ": not a P2/P5 PGM");
  int maxval = 0;
  try {
    grid.width = std::stoi(token());
    grid.height = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw InputError(path.string() + ": malformed PGM header");
  }
  if (grid.width <= 0 || grid.height <= 0 || maxval <= 0 || maxval > 255) {
    throw InputError(path.string() + ": unsupported PGM dimensions or maxval");
  }
  grid.cells.assign(static_cast<std::size_t>(grid.width) * grid.height, Cell::Unknown);
  for (int row = 0; row < grid.height; ++row) {
    for (int ix = 0; ix < grid.width; ++ix) {
      int value = 0;
      if (magic == "P5") {
        char c;
        if (!in.get(c)) throw InputError(path.string() + ": truncated pixel data");
        value = static_cast<unsigned char>(c);
      } else {
        const std::string t = token();
        if (t.empty()) throw InputError(path.string() + ": truncated pixel data");
        value = std::stoi(t);
      }
      const double occ = static_cast<double>(maxval - value) / maxval;
      Cell cell = Cell::Unknown;
      if (occ > occ_thresh) cell = Cell::Occupied;
      else if (occ < free_thresh) cell = Cell::Free;
      grid.at(ix, grid.height - 1 - row) = cell;
    }
  }
  return grid;
}

std::string grid_to_json(const OccupancyGrid& grid) {
  validate(grid);
  json rows = json::array();
  for (int iy = grid.height - 1; iy >= 0; --iy) {
    std::string row;
    for (int ix = 0; ix < grid.width; ++ix) {
      const Cell c = grid.at(ix, iy);
      row.push_back(c == Cell::Free ? '.' : c == Cell::Occupied ? '#' : '?');
    }
    rows.push_back(row);
  }
  json j{{"origin", {grid.origin.x(), grid.origin.y()}}, {"resolution", grid.resolution}, {"rows", rows}};
  return j.dump(1);
}

OccupancyGrid grid_from_json(const std::string& text) {
  const json j = parse_json(text, "grid");
  OccupancyGrid grid;
  try {
    if (j.contains("origin")) grid.origin = Vec2(j["origin"].at(0).get<double>(), j["origin"].at(1).get<double>());
    if (j.contains("resolution")) grid.resolution = j["resolution"].get<double>();
    const auto& rows = j.at("rows");
    grid.height = static_cast<int>(rows.size());
    grid.width = grid.height ? static_cast<int>(rows.at(0).get<std::string>().size()) : 0;
    grid.cells.assign(static_cast<std::size_t>(grid.width) * grid.height, Cell::Unknown);
    for (int r = 0; r < grid.height; ++r) {
      const std::string row = rows.at(r).get<std::string>();
      if (static_cast<int>(row.size()) != grid.width) {
        throw InputError("grid.rows[" + std::to_string(r) + "]: row length differs from the first row");
      }
      for (int ix = 0; ix < grid.width; ++ix) {
        Cell c;
        switch (row[ix]) {
          case '.': c = Cell::Free; break;
          case '#': c = Cell::Occupied; break;
          case '?': c = Cell::Unknown; break;
          default:
            throw InputError("grid.rows[" + std::to_string(r) + "]: unexpected character '" + row[ix] + "'");
        }
        grid.at(ix, grid.height - 1 - r) = c;
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("grid: ") + e.what());
  }
  validate(grid);
  return grid;
}

namespace {

Vec2 read_vec2(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw InputError(path + ": expected [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

PlaneAxis read_axis(const std::string& s, const std::string& path) {
  if (s == "x") return PlaneAxis::X;
  if (s == "y") return PlaneAxis::Y;
  throw InputError(path + ": expected \"x\" or \"y\"");
}

}  // namespace

SceneSpec parse_scene_spec(const std::string& text) {
  using detail::Reader;
  const json j = parse_json(text, "scene");
  SceneSpec spec;
  const Reader root(j, "");
  root.allow({"name", "floorplan", "trajectory", "noise", "sensor"});
  spec.name = root.string("name", std::string("scene"));

  const Reader fp = root.object("floorplan");
  fp.allow({"rooms", "doorways", "wall_height", "floor_z"});
  spec.floorplan.wall_height = fp.number("wall_height", 2.5);
  spec.floorplan.floor_z = fp.number("floor_z", 0.0);
  const json& rooms = fp.array("rooms");
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    const Reader r(rooms[i], fp.sub("rooms[" + std::to_string(i) + "]"));
    r.allow({"name", "x_min", "x_max", "y_min", "y_max", "corridor"});
    RoomRect rect;
    rect.name = r.string("name", "room" + std::to_string(i));
    rect.x_min = r.number("x_min");
    rect.x_max = r.number("x_max");
    rect.y_min = r.number("y_min");
    rect.y_max = r.number("y_max");
    rect.corridor = r.boolean("corridor", false);
    spec.floorplan.rooms.push_back(rect);
  }
  if (fp.has("doorways")) {
    const json& doors = fp.array("doorways");
    for (std::size_t i = 0; i < doors.size(); ++i) {
      const std::string p = fp.sub("doorways[" + std::to_string(i) + "]");
      const Reader d(doors[i], p);
      d.allow({"axis", "coordinate", "from", "to"});
      Doorway door;
      door.axis = read_axis(d.string("axis"), p + ".axis");
      door.coordinate = d.number("coordinate");
      door.from = d.number("from");
      door.to = d.number("to");
      spec.floorplan.doorways.push_back(door);
    }
  }

  const Reader tr = root.object("trajectory");
  tr.allow({"waypoints", "speed", "sample_rate", "laps"});
  const json& wps = tr.array("waypoints");
  for (std::size_t i = 0; i < wps.size(); ++i) {
    spec.trajectory.waypoints.push_back(read_vec2(wps[i], tr.sub("waypoints[" + std::to_string(i) + "]")));
  }
  spec.trajectory.speed = tr.number("speed", 1.0);
  spec.trajectory.sample_rate = tr.number("sample_rate", 2.0);
  const double laps = tr.number("laps", 1.0);
  if (laps != std::floor(laps)) throw InputError(tr.sub("laps") + ": expected an integer");
  spec.trajectory.laps = static_cast<int>(laps);

  const Reader nz = root.object("noise");
  nz.allow({"odom_translation_sigma", "odom_rotation_sigma_deg", "point_sigma", "seed"});
  spec.noise.odom_translation_sigma = nz.number("odom_translation_sigma", 0.0);
  spec.noise.odom_rotation_sigma = deg2rad(nz.number("odom_rotation_sigma_deg", 0.0));
  spec.noise.point_sigma = nz.number("point_sigma", 0.0);
  const double seed = nz.number("seed", 1.0);
  if (seed < 0 || seed != std::floor(seed)) throw InputError(nz.sub("seed") + ": expected a non-negative integer");
  spec.noise.seed = static_cast<std::uint64_t>(seed);

  const Reader se = root.object("sensor");
  se.allow({"range", "point_spacing", "height_step"});
  spec.sensor.range = se.number("range", 15.0);
  spec.sensor.point_spacing = se.number("point_spacing", 0.2);
  spec.sensor.height_step = se.number("height_step", 0.25);

  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  return spec;
}

SceneSpec read_scene_spec(const std::filesystem::path& path) {
  try {
    return parse_scene_spec(read_text(path));
  } catch (const InputError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path.string(), 0) == 0) throw;
    throw InputError(path.string() + ": " + msg);
  }
}

std::string scene_spec_to_json(const SceneSpec& spec) {
  json rooms = json::array();
  for (const auto& r : spec.floorplan.rooms) {
    rooms.push_back({{"name", r.name},
                     {"x_min", r.x_min},
                     {"x_max", r.x_max},
                     {"y_min", r.y_min},
                     {"y_max", r.y_max},
                     {"corridor", r.corridor}});
  }
  json doors = json::array();
  for (const auto& d : spec.floorplan.doorways) {
    doors.push_back({{"axis", d.axis == PlaneAxis::X ? "x" : "y"},
                     {"coordinate", d.coordinate},
                     {"from", d.from},
                     {"to", d.to}});
  }
  json wps = json::array();
  for (const auto& w : spec.trajectory.waypoints) wps.push_back({w.x(), w.y()});
  json j{{"name", spec.name},
         {"floorplan",
          {{"rooms", rooms},
           {"doorways", doors},
           {"wall_height", spec.floorplan.wall_height},
           {"floor_z", spec.floorplan.floor_z}}},
         {"trajectory",
          {{"waypoints", wps},
           {"speed", spec.trajectory.speed},
           {"sample_rate", spec.trajectory.sample_rate},
           {"laps", spec.trajectory.laps}}},
         {"noise",
          {{"odom_translation_sigma", spec.noise.odom_translation_sigma},
           {"odom_rotation_sigma_deg", rad2deg(spec.noise.odom_rotation_sigma)},
           {"point_sigma", spec.noise.point_sigma},
           {"seed", spec.noise.seed}}},
         {"sensor",
          {{"range", spec.sensor.range},
           {"point_spacing", spec.sensor.point_spacing},
           {"height_step", spec.sensor.height_step}}}};
  return j.dump(2);
}

void write_ground_truth(const std::filesystem::path& path, const SyntheticScene& scene) {
  json planes = json::array();
  for (const auto& p : scene.truth_planes) {
    const auto& n = p.plane.normal;
    planes.push_back({{"room", p.room},
                      {"plane", {n.x(), n.y(), n.z(), p.plane.distance}},
                      {"axis", std::string(to_string(p.plane_class.axis))},
                      {"sign", std::string(to_string(p.plane_class.sign))}});
  }
  json rooms = json::array();
  for (const auto& r : scene.truth_rooms) {
    rooms.push_back({{"name", r.name},
                     {"kind", std::string(to_string(r.kind))},
                     {"center", {r.center.x(), r.center.y()}},
                     {"plane_indices", r.plane_indices}});
  }
  json j{{"planes", planes},
         {"rooms", rooms},
         {"floor_center", {scene.floor_center.x(), scene.floor_center.y()}}};
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

std::vector<TruthRoom> read_truth_rooms(const std::filesystem::path& path) {
  const json j = parse_json(read_text(path), path.string());
  std::vector<TruthRoom> rooms;
  try {
    for (const auto& r : j.at("rooms")) {
      TruthRoom t;
      t.name = r.at("name").get<std::string>();
      const std::string kind = r.at("kind").get<std::string>();
      if (kind == "four_wall") t.kind = RoomKind::FourWall;
      else if (kind == "two_wall_x") t.kind = RoomKind::TwoWallX;
      else if (kind == "two_wall_y") t.kind = RoomKind::TwoWallY;
      else throw InputError(path.string() + ": unknown room kind '" + kind + "'");
      t.center = Vec2(r.at("center").at(0).get<double>(), r.at("center").at(1).get<double>());
      t.plane_indices = r.at("plane_indices").get<std::vector<int>>();
      rooms.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return rooms;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

}  // namespace sgraphs
