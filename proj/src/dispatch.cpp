#include "pqflex/dispatch.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "pqflex/boundary.hpp"
#include "pqflex/parallel.hpp"
#include "pqflex/solve.hpp"

namespace pqflex {

DispatchPoint min_cost_dispatch(const NetworkCase& network, const Configuration& config, const TargetPoint& target,
                                const SolverSettings& settings, const std::optional<Vector>& warm_start) {
  const QcpProblem problem = build_problem(network, config, ObjectiveSpec::min_cost(target));
  const QcpSolution sol = solve(problem, settings, warm_start);
  DispatchPoint out;
  out.target = target;
  out.status = sol.status;
  out.iterations = sol.iterations;
  out.message = sol.message;
  out.feasible = sol.status == SolveStatus::Optimal;
  const auto& L = problem.layout;
  for (int u = 0; u < L.n_flex; ++u) {
    UnitRegulation r;
    r.label = network.flex_units[static_cast<std::size_t>(u)].label;
    if (out.feasible) {
      r.p_up = network.to_mw(sol.x[L.p_up(u)]);
      r.p_dn = network.to_mw(sol.x[L.p_dn(u)]);
      r.q_up = network.to_mw(sol.x[L.q_up(u)]);
      r.q_dn = network.to_mw(sol.x[L.q_dn(u)]);
    }
    out.units.push_back(r);
  }
  if (out.feasible) {
    out.total_cost = problem.flex_cost(sol.x);
    out.binding = problem.binding_tags(sol.x);
    out.x = sol.x;
  }
  return out;
}

bool GridSpec::same_as(const GridSpec& o) const {
  const double tol = 1e-9 * std::max(1.0, std::abs(step));
  return n_p == o.n_p && n_q == o.n_q && std::abs(step - o.step) <= tol && std::abs(p0 - o.p0) <= tol &&
         std::abs(q0 - o.q0) <= tol;
}

GridSpec make_grid(const Point& lo, const Point& hi, const Point& anchor, double step) {
  if (!(step > 0) || !std::isfinite(step)) throw std::invalid_argument("step must be positive");
  if (!(lo.p <= hi.p && lo.q <= hi.q)) throw std::invalid_argument("grid range is empty");
  GridSpec g;
  g.step = step;
  auto axis = [&](double a, double b, double c, double& origin, int& count) {
    const double below = std::ceil((c - (a - step)) / step - 1e-9);
    origin = c - below * step;
    count = static_cast<int>(std::ceil((b + step - origin) / step - 1e-9)) + 1;
  };
  axis(lo.p, hi.p, anchor.p, g.p0, g.n_p);
  axis(lo.q, hi.q, anchor.q, g.q0, g.n_q);
  return g;
}

GridSpec grid_around(const Polygon& polygon, const Point& anchor, double step) {
  Point lo = anchor, hi = anchor;
  for (const auto& v : polygon) {
    lo = {std::min(lo.p, v.p), std::min(lo.q, v.q)};
    hi = {std::max(hi.p, v.p), std::max(hi.q, v.q)};
  }
  return make_grid(lo, hi, anchor, step);
}

int CostSurface::feasible_count() const {
  int n = 0;
  for (const auto& p : points) n += p.feasible;
  return n;
}

CostSurface cost_map(const NetworkCase& network, const Configuration& config, const GridSpec& grid,
                     const CostMapOptions& options) {
  if (!(grid.step > 0)) throw std::invalid_argument("step must be positive");
  if (grid.n_p < 1 || grid.n_q < 1) throw std::invalid_argument("grid range is empty");
  CostSurface out;
  out.config_label = config.label;
  out.grid = grid;
  out.base_point = base_point(network, config);
  out.points.resize(static_cast<std::size_t>(grid.size()));

  auto nearest = [](double v, double origin, double step, int n) {
    return std::clamp(static_cast<int>(std::lround((v - origin) / step)), 0, n - 1);
  };
  const int i0 = nearest(out.base_point.p, grid.p0, grid.step, grid.n_p);
  const int j0 = nearest(out.base_point.q, grid.q0, grid.step, grid.n_q);

  auto solve_node = [&](int i, int j, std::optional<Vector>& warm) {
    const Point t = grid.node(i, j);
    DispatchPoint dp = min_cost_dispatch(network, config, {t.p, t.q}, options.solver, warm);
    if (dp.feasible) warm = dp.x;
    out.points[static_cast<std::size_t>(grid.index(i, j))] = std::move(dp);
  };
  // Chains walk outward from a seed node; `warm` is the last feasible solution.
  auto chain = [&](int from, int to, int dir, auto&& at, std::optional<Vector> warm) {
    for (int k = from; dir > 0 ? k <= to : k >= to; k += dir) at(k, warm);
  };

  std::optional<Vector> seed;
  solve_node(i0, j0, seed);
  std::vector<std::optional<Vector>> row_seed(static_cast<std::size_t>(grid.n_p));
  row_seed[static_cast<std::size_t>(i0)] = seed;
  auto along_row = [&](int i, std::optional<Vector>& warm) {
    solve_node(i, j0, warm);
    row_seed[static_cast<std::size_t>(i)] = warm;
  };
  parallel_for(2, options.jobs, [&](std::size_t side) {
    if (side == 0)
      chain(i0 + 1, grid.n_p - 1, +1, along_row, seed);
    else
      chain(i0 - 1, 0, -1, along_row, seed);
  });
  parallel_for(static_cast<std::size_t>(grid.n_p) * 2, options.jobs, [&](std::size_t task) {
    const int i = static_cast<int>(task / 2);
    auto along_col = [&](int j, std::optional<Vector>& warm) { solve_node(i, j, warm); };
    if (task % 2 == 0)
      chain(j0 + 1, grid.n_q - 1, +1, along_col, row_seed[static_cast<std::size_t>(i)]);
    else
      chain(j0 - 1, 0, -1, along_col, row_seed[static_cast<std::size_t>(i)]);
  });

  for (int j = 0; j < grid.n_q; ++j)
    for (int i = 0; i < grid.n_p; ++i) {
      auto& dp = out.points[static_cast<std::size_t>(grid.index(i, j))];
      if (dp.status == SolveStatus::IterLimit || dp.status == SolveStatus::NumericFailure)
        out.failures.push_back({i, j, grid.node(i, j), dp.status, dp.message});
      if (!options.keep_solutions) dp.x = Vector();
    }
  return out;
}

SurfaceComparison compare_surfaces(const CostSurface& a, const CostSurface& b) {
  if (!a.grid.same_as(b.grid)) throw std::invalid_argument("cost surfaces are defined on different grids");
  SurfaceComparison c;
  c.label_a = a.config_label;
  c.label_b = b.config_label;
  c.grid = a.grid;
  c.delta.assign(a.points.size(), std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  bool first = true;
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    const auto& pa = a.points[k];
    const auto& pb = b.points[k];
    if (pa.feasible && pb.feasible) {
      const double d = pb.total_cost - pa.total_cost;
      c.delta[k] = d;
      ++c.common_feasible;
      sum += d;
      c.max_delta = first ? d : std::max(c.max_delta, d);
      c.min_delta = first ? d : std::min(c.min_delta, d);
      first = false;
      if (d < -1e-4) ++c.b_cheaper;
    } else if (pb.feasible) {
      ++c.gained;
    } else if (pa.feasible) {
      ++c.lost;
    }
  }
  c.mean_delta = c.common_feasible ? sum / c.common_feasible : 0.0;
  c.area_gained = (c.gained - c.lost) * a.grid.step * a.grid.step;
  return c;
}

}  // namespace pqflex
