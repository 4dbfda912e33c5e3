#include <doctest.h>

#include "pqflex/boundary.hpp"
#include "pqflex/ipm.hpp"
#include "pqflex/oracle.hpp"
#include "pqflex/solve.hpp"
#include "support.hpp"

using namespace pqflex;

namespace {

/// min c'x over a box.
struct BoxLp : QuadraticModel {
  BoxLp(const std::vector<double>& c, const std::vector<double>& lo, const std::vector<double>& hi) {
    resize(static_cast<int>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) {
      lower[static_cast<int>(i)] = lo[i];
      upper[static_cast<int>(i)] = hi[i];
      objective_form.linear.emplace_back(static_cast<int>(i), c[i]);
    }
  }
};

}  // namespace

TEST_CASE("box-bounded LP reaches its closed-form vertex") {
  const BoxLp lp({1.0, -2.0, 0.5, 0.0}, {-1.0, 0.0, 2.0, -1.0}, {3.0, 4.0, 5.0, 1.0});
  const NlpSolution s = solve_nlp(lp, SolverSettings{});
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.x[0] == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(s.x[1] == doctest::Approx(4.0).epsilon(1e-7));
  CHECK(s.x[2] == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(std::abs(s.x[3]) <= 1.0);
  CHECK(s.objective == doctest::Approx(-1.0 - 8.0 + 1.0).epsilon(1e-7));
}

TEST_CASE("two-bus MinCost at the base point costs nothing") {
  const NetworkCase n = parse_case(pqtest::two_bus_text(0.01, 0.03, 1.0, 0.5, {{}}));
  const auto c = normal_configuration(n);
  const Point base = base_point(n, c);
  const QcpProblem p = build_problem(n, c, ObjectiveSpec::min_cost({base.p, base.q}));
  const QcpSolution s = solve(p, SolverSettings{});
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(std::abs(p.flex_cost(s.x)) < 1e-5);
  const auto& L = p.layout;
  for (int k = 0; k < 4; ++k) CHECK(std::abs(s.x[L.p_up(0) + k]) < 1e-7);
  const KktReport k = kkt_report(p, s);
  CHECK(k.overall() <= 1e-8);
  CHECK(k.stationarity <= 1e-8);
  CHECK(k.primal_equality <= 1e-8);
  CHECK(k.primal_inequality <= 1e-8);
  CHECK(k.complementarity <= 1e-8);
}

TEST_CASE("two-bus maximum import matches a scalar brute-force search") {
  pqtest::UnitSpec u;
  u.p_up = 0;
  u.q_up = 0;
  u.q_dn = 0;
  const NetworkCase n = parse_case(pqtest::two_bus_text(0.01, 0.03, 1.0, 0.5, {u}));
  const auto c = normal_configuration(n);
  const QcpProblem p = build_problem(n, c, ObjectiveSpec::boundary(-1, 0));
  const QcpSolution s = solve(p, SolverSettings{});
  REQUIRE(s.status == SolveStatus::Optimal);

  double best = -1e9;
  auto inj = base_injections(n);
  PowerFlowOptions opt;
  for (int k = 0; k <= 10000; ++k) {
    const double dn = 1e-4 * k;
    inj[1].p = -1.0 - dn;
    for (double v_ref : {0.99, 1.0, 1.01}) {
      opt.v_ref = v_ref;
      const auto pf = ac_power_flow(n, c, inj, opt);
      if (pf.converged) best = std::max(best, pf.slack_p_mw);
    }
  }
  const double got = p.interface_p_mw(s.x);
  CHECK(got == doctest::Approx(best).epsilon(1e-6));
  CHECK(got > 2.0);
  CHECK(s.x[p.layout.p_dn(0)] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("MinCost far outside the feasible area is infeasible") {
  const NetworkCase n = pqtest::bundled();
  const auto c = normal_configuration(n);
  const Point base = base_point(n, c);
  // Aggregate flexibility is 4 MW, so twice that beyond the base cannot be reached.
  const QcpProblem p = build_problem(n, c, ObjectiveSpec::min_cost({base.p + 8.0, base.q}));
  const QcpSolution s = solve(p, settings_for(n));
  CHECK(s.status == SolveStatus::Infeasible);
}

TEST_CASE("kkt_report flags a perturbed voltage") {
  const NetworkCase n = pqtest::bundled();
  const auto c = normal_configuration(n);
  const QcpProblem p = build_problem(n, c, ObjectiveSpec::boundary(1, 0));
  QcpSolution s = solve(p, settings_for(n));
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(kkt_report(p, s).overall() <= 1e-8);
  CHECK(s.kkt_residual <= 1e-8);
  s.x[p.layout.e(5)] += 1e-3;
  CHECK(kkt_report(p, s).primal_equality > 1e-4);
}

TEST_CASE("solves are deterministic") {
  const NetworkCase n = pqtest::bundled();
  const auto c = normal_configuration(n);
  const QcpProblem p = build_problem(n, c, ObjectiveSpec::boundary(-0.6, 0.8));
  const QcpSolution a = solve(p, settings_for(n)), b = solve(p, settings_for(n));
  CHECK(a.iterations == b.iterations);
  CHECK(a.objective == b.objective);
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("warm starts from a neighbouring target usually save iterations") {
  const NetworkCase n = pqtest::bundled();
  const auto c = normal_configuration(n);
  const Point base = base_point(n, c);
  const SolverSettings s = settings_for(n);
  int better = 0, total = 0;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j) {
      const TargetPoint t{base.p + 0.3 * i, base.q + 0.3 * j};
      const TargetPoint nb{t.p_mw - 0.05, t.q_mvar};
      const QcpSolution w = solve(build_problem(n, c, ObjectiveSpec::min_cost(nb)), s);
      if (w.status != SolveStatus::Optimal) continue;
      const QcpProblem p = build_problem(n, c, ObjectiveSpec::min_cost(t));
      const QcpSolution flat = solve(p, s), warm = solve(p, s, w.x);
      if (flat.status != SolveStatus::Optimal || warm.status != SolveStatus::Optimal) continue;
      ++total;
      better += warm.iterations <= flat.iterations ? 1 : 0;
    }
  MESSAGE("warm <= flat iterations on " << better << " of " << total << " targets");
  REQUIRE(total > 20);
  CHECK(better >= 0.8 * total);
}
