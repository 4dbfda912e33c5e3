#pragma once

#include <optional>
#include <string>

#include "pqflex/nlp.hpp"

namespace pqflex {

struct SolverSettings {
  double tol_kkt = 1e-8;
  int max_iter = 500;
  /// Initial barrier parameter for flat starts and for warm starts.
  double mu_init = 0.1;
  double mu_init_warm = 1e-3;
  /// Fraction-to-boundary floor.
  double tau_min = 0.99;
  /// Backtracking factor and filter margins.
  double backtrack = 0.5;
  double gamma_theta = 1e-5;
  double gamma_phi = 1e-8;
  double armijo_eta = 1e-4;
  /// Variable bounds are relaxed by this relative amount before solving.
  double bound_relax = 1e-10;
  double bound_push = 1e-2;
  /// Randomised voltage restarts on top of the first start (QCP solves only).
  int multistart = 0;
  unsigned seed = 20230101;
  /// Maximum elastic restoration phases per solve; 0 disables restoration.
  int max_restorations = 4;
  bool verbose = false;
};

enum class SolveStatus { Optimal, Infeasible, IterLimit, NumericFailure };

const char* to_string(SolveStatus status);

/**
 * Result of an interior-point solve. The multiplier and slack vectors use the
 * solver's internal row order: the problem's own equalities and inequalities
 * first, followed by fixed-variable rows (equalities) and finite bound rows
 * (lower, then upper; inequalities).
 */
struct NlpSolution {
  SolveStatus status = SolveStatus::NumericFailure;
  Vector x;
  Vector y;  // equality multipliers
  Vector z;  // inequality multipliers (>= 0)
  Vector s;  // inequality slacks (> 0)
  double objective = 0.0;
  double objective_scale = 1.0;
  double kkt_residual = 0.0;
  double infeasibility = 0.0;  // max-norm of constraint violation at x
  int iterations = 0;
  int restorations = 0;
  double wall_seconds = 0.0;
  std::string message;
};

/// Scaled first-order optimality measures, each in the max-norm.
struct KktReport {
  double stationarity = 0.0;
  double primal_equality = 0.0;
  double primal_inequality = 0.0;
  double complementarity = 0.0;

  double overall() const;
};

/**
 * Primal-dual interior-point method with a filter line search, inertia
 * correction of the KKT matrix (sparse LDL^T) and an elastic restoration phase.
 * Single-threaded and deterministic.
 */
NlpSolution solve_nlp(const NlpProblem& problem, const SolverSettings& settings,
                      const std::optional<Vector>& warm_start = std::nullopt);

/// Recomputes the optimality measures of `solution` against `problem`.
KktReport kkt_report(const NlpProblem& problem, const NlpSolution& solution);

}  // namespace pqflex
