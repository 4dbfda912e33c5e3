#include <doctest.h>

#include <complex>
#include <limits>

#include "pqflex/boundary.hpp"
#include "pqflex/dispatch.hpp"
#include "pqflex/oracle.hpp"
#include "pqflex/solve.hpp"
#include "support.hpp"

using namespace pqflex;

namespace {

using cd = std::complex<double>;

double seg_distance(const Point& a, const Point& b, const Point& p) {
  const double dx = b.p - a.p, dy = b.q - a.q;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.p - a.p) * dx + (p.q - a.q) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(a.p + t * dx - p.p, a.q + t * dy - p.q);
}

double edge_distance(const Polygon& poly, const Point& p) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < poly.size(); ++k) d = std::min(d, seg_distance(poly[k], poly[(k + 1) % poly.size()], p));
  return d;
}

/// Cheapest way to cover a regulation of `need` MW with units sorted by price.
double greedy(double need, const std::vector<std::pair<double, double>>& price_cap) {
  double cost = 0, left = std::abs(need);
  for (const auto& [price, cap] : price_cap) {
    const double take = std::min(left, cap);
    cost += price * take;
    left -= take;
  }
  return left > 1e-12 ? std::numeric_limits<double>::infinity() : cost;
}

/**
 * Two co-located units at bus 2: for a reference voltage v the interface
 * power fixes the line current and therefore the bus-2 injection, so the
 * least-cost dispatch is a scan over v.
 */
double brute_force_two_bus(double r, double x, double p_load, double q_load, const TargetPoint& t) {
  const cd z(r, x);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 20000; ++k) {
    const double v = 0.99 + 1e-6 * k;
    const cd i = std::conj(cd(t.p_mw, t.q_mvar) / v);
    const cd v2 = v - z * i;
    if (std::abs(v2) < 0.94 || std::abs(v2) > 1.06) continue;
    const cd s2 = v2 * std::conj(i);
    const double dp = p_load - s2.real(), dq = q_load - s2.imag();
    const double c = greedy(dp, {{300, 1}, {375, 1}}) + greedy(dq, {{150, 1}, {200, 1}});
    best = std::min(best, c);
  }
  return best;
}

}  // namespace

TEST_CASE("dispatch at the base point is free") {
  const NetworkCase n = pqtest::bundled();
  const auto c = normal_configuration(n);
  const Point base = base_point(n, c);
  const DispatchPoint d = min_cost_dispatch(n, c, {base.p, base.q}, settings_for(n));
  REQUIRE(d.feasible);
  CHECK(d.total_cost <= 1e-3);
  for (const auto& u : d.units) CHECK(u.p_up + u.p_dn + u.q_up + u.q_dn <= 1e-5);
}

TEST_CASE("co-located units are dispatched in merit order") {
  pqtest::UnitSpec a, b;
  b.label = "B";
  b.cost_p = 375;
  b.cost_q = 200;
  const double r = 0.01, x = 0.03, pl = 1.0, ql = 0.5;
  const NetworkCase n = parse_case(pqtest::two_bus_text(r, x, pl, ql, {a, b}));
  const auto c = normal_configuration(n);

  for (double consume : {0.5, 1.3}) {
    auto inj = base_injections(n);
    inj[1].p -= consume;
    const auto pf = ac_power_flow(n, c, inj);
    REQUIRE(pf.converged);
    const TargetPoint t{pf.slack_p_mw, pf.slack_q_mvar};
    const DispatchPoint d = min_cost_dispatch(n, c, t);
    REQUIRE(d.feasible);
    const double brute = brute_force_two_bus(r, x, pl, ql, t);
    CHECK(d.total_cost <= brute + 1e-3);
    CHECK(d.total_cost >= brute - 1e-3 * brute);
    CHECK(d.units[0].p_dn == doctest::Approx(std::min(1.0, d.units[0].p_dn + d.units[1].p_dn)).epsilon(1e-5));
    if (consume < 1.0) CHECK(d.units[1].p_dn <= 1e-6);
    else CHECK(d.units[1].p_dn > 0.2);
  }
}

TEST_CASE("grid construction") {
  const GridSpec g = make_grid({0.0, 0.0}, {1.0, 0.5}, {0.33, 0.21}, 0.1);
  CHECK(g.p0 <= -0.1 + 1e-9);
  CHECK(g.p0 > -0.2);
  CHECK(g.node(g.n_p - 1, 0).p >= 1.1 - 1e-9);
  CHECK(g.node(g.n_p - 1, 0).p < 1.2);
  CHECK(g.q0 <= -0.1 + 1e-9);
  CHECK(g.node(0, g.n_q - 1).q >= 0.6 - 1e-9);
  bool anchored = false;
  for (int i = 0; i < g.n_p; ++i)
    for (int j = 0; j < g.n_q; ++j)
      anchored |= std::abs(g.node(i, j).p - 0.33) < 1e-12 && std::abs(g.node(i, j).q - 0.21) < 1e-12;
  CHECK(anchored);
  CHECK_THROWS_AS(make_grid({0, 0}, {1, 1}, {0, 0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid({0, 0}, {1, 1}, {0, 0}, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid({1, 0}, {0, 1}, {0, 0}, 0.1), std::invalid_argument);
}

TEST_CASE("single-node cost map and comparisons") {
  const NetworkCase n = parse_case(pqtest::two_bus_text(0.01, 0.03, 1.0, 0.5, {{}}));
  const auto c = normal_configuration(n);
  const Point base = base_point(n, c);
  GridSpec g;
  g.p0 = base.p;
  g.q0 = base.q;
  const CostSurface s = cost_map(n, c, g);
  REQUIRE(s.points.size() == 1);
  CHECK(s.points[0].feasible);
  CHECK(s.points[0].total_cost <= 1e-4);

  g.n_p = 3;
  g.p0 -= 0.2;
  const CostSurface wide = cost_map(n, c, g);
  const SurfaceComparison self = compare_surfaces(wide, wide);
  CHECK(self.common_feasible == wide.feasible_count());
  CHECK(self.gained == 0);
  CHECK(self.lost == 0);
  CHECK(self.max_delta == 0.0);
  CHECK(self.min_delta == 0.0);
  CHECK_THROWS_AS(compare_surfaces(s, wide), std::invalid_argument);

  GridSpec bad;
  bad.step = 0;
  CHECK_THROWS_AS(cost_map(n, c, bad), std::invalid_argument);
}

TEST_CASE("bundled cost map: economic invariants and boundary consistency") {
  const NetworkCase n = pqtest::bundled();
  const auto c = normal_configuration(n);
  TraceOptions to;
  to.step_mva = 0.16;
  to.solver = settings_for(n);
  const FlexibilityBoundary b = trace_boundary(n, c, to);
  const Polygon poly = b.polygon();
  CostMapOptions co;
  co.solver = to.solver;
  const double step = 0.5;
  const CostSurface s = cost_map(n, c, grid_around(poly, b.base_point, step), co);
  CHECK(s.failures.empty());

  std::vector<double> cap;
  for (const auto& u : n.flex_units) cap.push_back(u.p_up_max + u.p_dn_max);
  for (int i = 0; i < s.grid.n_p; ++i)
    for (int j = 0; j < s.grid.n_q; ++j) {
      const DispatchPoint& d = s.at(i, j);
      const Point t = s.grid.node(i, j);
      if (d.feasible) {
        CHECK(d.total_cost >= -1e-4);
        for (const auto& u : d.units) {
          CHECK(std::min(u.p_up, u.p_dn) <= 1e-5);
          CHECK(std::min(u.q_up, u.q_dn) <= 1e-5);
        }
        CHECK_MESSAGE(point_in_polygon(t, poly, step), "feasible node far outside " << t.p << ", " << t.q);
      } else if (point_in_polygon(t, poly) && edge_distance(poly, t) > step) {
        FAIL_CHECK("infeasible node deep inside the boundary at " << t.p << ", " << t.q);
      }
    }

  // Cost grows moving away from the base point along each grid axis.
  const int i0 = static_cast<int>(std::lround((b.base_point.p - s.grid.p0) / step));
  const int j0 = static_cast<int>(std::lround((b.base_point.q - s.grid.q0) / step));
  auto ray = [&](int di, int dj) {
    double prev = s.at(i0, j0).total_cost;
    for (int i = i0 + di, j = j0 + dj; i >= 0 && j >= 0 && i < s.grid.n_p && j < s.grid.n_q; i += di, j += dj) {
      const DispatchPoint& d = s.at(i, j);
      if (!d.feasible) break;
      CHECK(d.total_cost >= prev - 1e-3 * std::max(1.0, prev));
      prev = d.total_cost;
    }
  };
  ray(1, 0);
  ray(-1, 0);
  ray(0, 1);
  ray(0, -1);
}
