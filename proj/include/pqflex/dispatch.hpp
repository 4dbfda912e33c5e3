#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pqflex/acropf.hpp"
#include "pqflex/config.hpp"
#include "pqflex/geometry.hpp"
#include "pqflex/ipm.hpp"
#include "pqflex/network.hpp"

namespace pqflex {

struct UnitRegulation {
  std::string label;
  double p_up = 0.0;  // MW / MVAr
  double p_dn = 0.0;
  double q_up = 0.0;
  double q_dn = 0.0;
};

struct DispatchPoint {
  TargetPoint target;
  std::vector<UnitRegulation> units;  // case unit order
  double total_cost = 0.0;            // $/h
  bool feasible = false;
  SolveStatus status = SolveStatus::Infeasible;
  int iterations = 0;
  std::string message;
  std::vector<std::string> binding;
  Vector x;  // empty unless feasible
};

/**
 * Least-cost flexibility dispatch that moves the interface to `target`
 * (Objective II with the interface pinned). Infeasible targets come back with
 * feasible = false and zero regulations; IterLimit / NumericFailure are
 * reported through `status`.
 */
DispatchPoint min_cost_dispatch(const NetworkCase& network, const Configuration& config, const TargetPoint& target,
                                const SolverSettings& settings = {},
                                const std::optional<Vector>& warm_start = std::nullopt);

/// Regular P-Q grid; node (i, j) sits at (p0 + i step, q0 + j step).
struct GridSpec {
  double p0 = 0.0;
  double q0 = 0.0;
  double step = 0.05;
  int n_p = 1;
  int n_q = 1;

  Point node(int i, int j) const { return {p0 + i * step, q0 + j * step}; }
  int size() const { return n_p * n_q; }
  int index(int i, int j) const { return j * n_p + i; }
  bool same_as(const GridSpec& other) const;
};

/// Grid covering [lo, hi] expanded by one step on every side, with a node on `anchor`.
GridSpec make_grid(const Point& lo, const Point& hi, const Point& anchor, double step);
/// Grid over the bounding box of `polygon` anchored at `anchor`.
GridSpec grid_around(const Polygon& polygon, const Point& anchor, double step);

struct NodeFailure {
  int i = 0;
  int j = 0;
  Point target;
  SolveStatus status = SolveStatus::NumericFailure;
  std::string message;
};

struct CostSurface {
  std::string config_label;
  GridSpec grid;
  Point base_point;
  std::vector<DispatchPoint> points;  // row-major: index(i, j)
  std::vector<NodeFailure> failures;

  const DispatchPoint& at(int i, int j) const { return points[static_cast<std::size_t>(grid.index(i, j))]; }
  int feasible_count() const;
};

struct CostMapOptions {
  SolverSettings solver;
  int jobs = 1;
  bool keep_solutions = false;  // retain primal vectors of feasible nodes
};

/**
 * Solves min_cost_dispatch at every grid node. The row through the base
 * point is swept outward first, then every column outward from that row;
 * each node warm-starts from the last feasible node of its chain, so results
 * do not depend on the number of jobs.
 */
CostSurface cost_map(const NetworkCase& network, const Configuration& config, const GridSpec& grid,
                     const CostMapOptions& options = {});

struct SurfaceComparison {
  std::string label_a;
  std::string label_b;
  GridSpec grid;
  std::vector<double> delta;  // cost_b - cost_a where both feasible, NaN elsewhere
  int common_feasible = 0;
  int gained = 0;  // infeasible in a, feasible in b
  int lost = 0;    // feasible in a, infeasible in b
  int b_cheaper = 0;  // nodes with cost_b < cost_a - 1e-4
  double max_delta = 0.0;
  double min_delta = 0.0;
  double mean_delta = 0.0;
  double area_gained = 0.0;  // MVA^2
};

/// Throws std::invalid_argument when the grids differ.
SurfaceComparison compare_surfaces(const CostSurface& a, const CostSurface& b);

}  // namespace pqflex
