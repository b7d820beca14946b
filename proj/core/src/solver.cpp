#include "sgraphs/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <variant>

namespace sgraphs {

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::CostTol: return "cost_tol";
    case Termination::GradTol: return "grad_tol";
    case Termination::MaxIter: return "max_iter";
    case Termination::Diverged: return "diverged";
  }
  return "?";
}

namespace {

double robust(double s, const std::optional<double>& huber) {
  if (!huber) return s;
  const double k = *huber;
  const double e = std::sqrt(s);
  return e <= k ? s : 2.0 * k * e - k * k;
}

double robust_weight(double s, const std::optional<double>& huber) {
  if (!huber) return 1.0;
  const double e = std::sqrt(s);
  return e <= *huber ? 1.0 : *huber / e;
}

struct UnionFind {
  std::map<NodeId, NodeId> parent;
  NodeId find(NodeId x) {
    auto it = parent.find(x);
    if (it == parent.end()) {
      parent[x] = x;
      return x;
    }
    if (it->second == x) return x;
    const NodeId root = find(it->second);
    parent[x] = root;
    return root;
  }
  void unite(NodeId a, NodeId b) { parent[find(a)] = find(b); }
};

}  // namespace

double total_cost(const SituationalGraph& graph, const std::optional<double>& huber) {
  double cost = 0.0;
  for (const auto& f : graph.factors()) {
    const Eigen::VectorXd r = factor_residual(graph, f);
    cost += robust(r.dot(f.information * r), huber);
  }
  return cost;
}

void check_solvable(const SituationalGraph& graph) {
  UnionFind uf;
  for (std::size_t k = 0; k < graph.factors().size(); ++k) {
    const auto& f = graph.factors()[k];
    const Eigen::MatrixXd& info = f.information;
    const std::string where = "factor " + std::to_string(k) + " (" + std::string(to_string(f.kind)) + ")";
    if (!info.allFinite() || (info - info.transpose()).norm() > 1e-9 * std::max(1.0, info.norm())) {
      throw SolverError(where + ": information matrix is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) throw SolverError(where + ": information matrix is not positive definite");
    for (NodeId id : f.nodes) uf.unite(f.nodes.front(), id);
  }
  std::map<NodeId, bool> anchored;
  for (const auto& [id, parent] : uf.parent) {
    const NodeId root = uf.find(id);
    anchored[root] = anchored[root] || graph.node(id).fixed;
  }
  for (const auto& [root, ok] : anchored) {
    if (!ok) throw SolverError("component containing node " + std::to_string(root) + " has no fixed node");
  }
}

SolverReport optimize(SituationalGraph& graph, const SolverOptions& options) {
  check_solvable(graph);

  // Variable layout: non-fixed nodes touched by at least one factor.
  std::map<NodeId, int> offset;
  int dim = 0;
  for (const auto& f : graph.factors()) {
    for (NodeId id : f.nodes) {
      const auto& n = graph.node(id);
      if (n.fixed || offset.count(id)) continue;
      offset[id] = 0;
    }
  }
  for (auto& [id, off] : offset) {
    off = dim;
    dim += graph.node(id).tangent_dim();
  }

  SolverReport report;
  double cost = total_cost(graph, options.huber);
  report.initial_cost = cost;
  report.final_cost = cost;
  report.cost_history.push_back(cost);
  if (!std::isfinite(cost)) {
    report.termination = Termination::Diverged;
    return report;
  }
  if (dim == 0) {
    report.converged = true;
    report.termination = Termination::GradTol;
    return report;
  }

  double lambda = options.initial_lambda;
  std::vector<Eigen::Triplet<double>> triplets;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    report.iterations = iter;
    triplets.clear();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    for (const auto& f : graph.factors()) {
      const Linearization lin = linearize(graph, f);
      const double w = robust_weight(lin.residual.dot(f.information * lin.residual), options.huber);
      const Eigen::MatrixXd info = w * f.information;
      for (std::size_t a = 0; a < f.nodes.size(); ++a) {
        auto ia = offset.find(f.nodes[a]);
        if (ia == offset.end()) continue;
        const Eigen::MatrixXd JaT_info = lin.jacobians[a].transpose() * info;
        g.segment(ia->second, JaT_info.rows()) += JaT_info * lin.residual;
        for (std::size_t b = 0; b < f.nodes.size(); ++b) {
          auto ib = offset.find(f.nodes[b]);
          if (ib == offset.end()) continue;
          const Eigen::MatrixXd block = JaT_info * lin.jacobians[b];
          for (Eigen::Index r = 0; r < block.rows(); ++r) {
            for (Eigen::Index c = 0; c < block.cols(); ++c) {
              if (block(r, c) != 0.0) triplets.emplace_back(ia->second + r, ib->second + c, block(r, c));
            }
          }
        }
      }
    }
    if (g.lpNorm<Eigen::Infinity>() < options.grad_tol || cost < options.absolute_cost_tol) {
      report.converged = true;
      report.termination = cost < options.absolute_cost_tol ? Termination::CostTol : Termination::GradTol;
      break;
    }
    Eigen::SparseMatrix<double> H(dim, dim);
    H.setFromTriplets(triplets.begin(), triplets.end());
    const Eigen::VectorXd diag = H.diagonal().cwiseMax(1e-9);

    bool accepted = false;
    bool stalled = false;
    while (!accepted) {
      Eigen::SparseMatrix<double> A = H;
      for (int i = 0; i < dim; ++i) A.coeffRef(i, i) += lambda * diag(i);
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
      Eigen::VectorXd delta;
      if (ldlt.info() == Eigen::Success) delta = ldlt.solve(-g);
      if (ldlt.info() == Eigen::Success && delta.allFinite()) {
        std::map<NodeId, std::variant<Pose3, PlaneMinimal, Vec2>> backup;
        for (const auto& [id, off] : offset) {
          auto& n = graph.node(id);
          backup.emplace(id, n.state);
          apply_increment(n, delta.segment(off, n.tangent_dim()));
        }
        const double new_cost = total_cost(graph, options.huber);
        if (std::isfinite(new_cost) && new_cost < cost) {
          const double rel = (cost - new_cost) / cost;
          cost = new_cost;
          report.cost_history.push_back(cost);
          lambda = std::max(lambda / options.lambda_decrease, 1e-12);
          accepted = true;
          if (rel < options.cost_tol || cost < options.absolute_cost_tol) {
            report.converged = true;
            report.termination = Termination::CostTol;
          }
          break;
        }
        for (auto& [id, state] : backup) graph.node(id).state = state;
      }
      lambda *= options.lambda_increase;
      if (lambda > options.max_lambda) {
        // No step lowers the cost any further: a local minimum to numerical precision.
        stalled = true;
        break;
      }
    }
    if (stalled) {
      report.converged = true;
      report.termination = Termination::CostTol;
      break;
    }
    if (report.converged) break;
  }
  report.final_cost = cost;
  if (!std::isfinite(cost)) {
    report.converged = false;
    report.termination = Termination::Diverged;
  }
  return report;
}

}  // namespace sgraphs
