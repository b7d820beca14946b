#pragma once

#include "sgraphs/factor_graph.hpp"

#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace sgraphs {

/// Raised when the graph cannot be optimized as posed (gauge freedom left
/// open, information matrix not positive definite).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Termination { CostTol, GradTol, MaxIter, Diverged };

std::string_view to_string(Termination t);

struct SolverOptions {
  int max_iterations = 100;
  double cost_tol = 1e-10;      // relative cost decrease of an accepted step
  double grad_tol = 1e-10;      // infinity norm of the gradient
  double absolute_cost_tol = 1e-20;
  double initial_lambda = 1e-4;
  double lambda_increase = 10.0;
  double lambda_decrease = 3.0;
  double max_lambda = 1e12;
  std::optional<double> huber;  // threshold on sqrt(r^T info r); off when empty
};

struct SolverReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  Termination termination = Termination::MaxIter;
  std::vector<double> cost_history;  // initial cost, then each accepted step
};

/// Robustified cost: sum of rho(r^T info r) with rho the identity or Huber.
double total_cost(const SituationalGraph& graph, const std::optional<double>& huber);

/// Throws SolverError when a connected component that carries factors has no
/// fixed node, or an information matrix is not symmetric positive definite.
void check_solvable(const SituationalGraph& graph);

/// Levenberg-Marquardt over all non-fixed nodes touched by a factor.
SolverReport optimize(SituationalGraph& graph, const SolverOptions& options = {});

}  // namespace sgraphs
