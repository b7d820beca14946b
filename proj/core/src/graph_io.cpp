#include "sgraphs/graph_io.hpp"

#include "sgraphs/io.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace sgraphs {

using nlohmann::json;

namespace {

json pose_array(const Pose3& p) {
  const auto& q = p.rotation;
  const auto& t = p.translation;
  return json::array({q.w(), q.x(), q.y(), q.z(), t.x(), t.y(), t.z()});
}

Pose3 pose_from(const json& a, const std::string& where) {
  if (!a.is_array() || a.size() != 7) throw InputError(where + ": pose needs 7 numbers");
  Pose3 p;
  p.rotation = Eigen::Quaterniond(a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>());
  p.translation = Vec3(a[4].get<double>(), a[5].get<double>(), a[6].get<double>());
  return p;
}

NodeKind node_kind_from(const std::string& s, const std::string& where) {
  for (NodeKind k : {NodeKind::KeyframePose, NodeKind::WallPlane, NodeKind::Room, NodeKind::TwoWallRoom,
                     NodeKind::Floor}) {
    if (to_string(k) == s) return k;
  }
  throw InputError(where + ": unknown node kind '" + s + "'");
}

FactorKind factor_kind_from(const std::string& s, const std::string& where) {
  for (FactorKind k : {FactorKind::Odometry, FactorKind::PosePlane, FactorKind::FourWallRoom, FactorKind::TwoWallRoom,
                       FactorKind::FloorRoom, FactorKind::DuplicatePlane}) {
    if (to_string(k) == s) return k;
  }
  throw InputError(where + ": unknown factor kind '" + s + "'");
}

}  // namespace

std::string graph_to_json(const SituationalGraph& graph) {
  json nodes = json::array();
  for (const auto& [id, n] : graph.nodes()) {
    json state;
    switch (n.kind) {
      case NodeKind::KeyframePose: state = pose_array(n.pose()); break;
      case NodeKind::WallPlane:
        state = json::array({n.plane().azimuth, n.plane().elevation, n.plane().distance});
        break;
      default: state = json::array({n.point().x(), n.point().y()}); break;
    }
    nodes.push_back({{"id", id}, {"kind", std::string(to_string(n.kind))}, {"state", state}, {"fixed", n.fixed}});
  }
  json factors = json::array();
  for (const auto& f : graph.factors()) {
    json meas = json::array();
    for (Eigen::Index i = 0; i < f.measurement.size(); ++i) meas.push_back(f.measurement(i));
    json info = json::array();
    for (Eigen::Index r = 0; r < f.information.rows(); ++r) {
      for (Eigen::Index c = r; c < f.information.cols(); ++c) info.push_back(f.information(r, c));
    }
    factors.push_back({{"kind", std::string(to_string(f.kind))},
                       {"nodes", f.nodes},
                       {"measurement", meas},
                       {"information", info}});
  }
  json j{{"schema", kGraphSchema}, {"drift", pose_array(graph.drift)}, {"nodes", nodes}, {"factors", factors}};
  return j.dump(1);
}

SituationalGraph graph_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("graph: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("schema", std::string()) != kGraphSchema) {
    throw InputError(std::string("graph.schema: expected \"") + kGraphSchema + "\"");
  }
  SituationalGraph g;
  try {
    g.drift = pose_from(j.at("drift"), "graph.drift");
    const auto& nodes = j.at("nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const std::string where = "graph.nodes[" + std::to_string(i) + "]";
      const auto& n = nodes[i];
      VariableNode node;
      node.id = n.at("id").get<int>();
      node.kind = node_kind_from(n.at("kind").get<std::string>(), where + ".kind");
      node.fixed = n.at("fixed").get<bool>();
      const auto& s = n.at("state");
      switch (node.kind) {
        case NodeKind::KeyframePose: node.state = pose_from(s, where + ".state"); break;
        case NodeKind::WallPlane:
          if (s.size() != 3) throw InputError(where + ".state: plane needs 3 numbers");
          node.state = PlaneMinimal{s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
          break;
        default:
          if (s.size() != 2) throw InputError(where + ".state: point needs 2 numbers");
          node.state = Vec2(s[0].get<double>(), s[1].get<double>());
          break;
      }
      g.insert_node(node);
    }
    const auto& factors = j.at("factors");
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const std::string where = "graph.factors[" + std::to_string(i) + "]";
      const auto& fj = factors[i];
      Factor f;
      f.kind = factor_kind_from(fj.at("kind").get<std::string>(), where + ".kind");
      f.nodes = fj.at("nodes").get<std::vector<NodeId>>();
      const auto meas = fj.at("measurement").get<std::vector<double>>();
      f.measurement = Eigen::Map<const Eigen::VectorXd>(meas.data(), static_cast<Eigen::Index>(meas.size()));
      const auto info = fj.at("information").get<std::vector<double>>();
      const int dim = residual_dim(f.kind);
      if (static_cast<int>(info.size()) != dim * (dim + 1) / 2) {
        throw InputError(where + ".information: expected " + std::to_string(dim * (dim + 1) / 2) + " entries");
      }
      f.information.resize(dim, dim);
      std::size_t k = 0;
      for (int r = 0; r < dim; ++r) {
        for (int c = r; c < dim; ++c) f.information(r, c) = f.information(c, r) = info[k++];
      }
      try {
        g.add_factor(std::move(f));
      } catch (const std::invalid_argument& e) {
        throw InputError(where + ": " + e.what());
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("graph: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("graph: ") + e.what());
  }
  return g;
}

void write_graph(const std::filesystem::path& path, const SituationalGraph& graph) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << graph_to_json(graph) << '\n';
}

SituationalGraph read_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return graph_from_json(ss.str());
}

}  // namespace sgraphs
