#include <doctest.h>

#include <cmath>
#include <random>

#include "pqflex/boundary.hpp"
#include "pqflex/oracle.hpp"
#include "pqflex/solve.hpp"
#include "support.hpp"

using namespace pqflex;

namespace {

/// Receiving-end voltage of a two-bus line with |V1| = 1 from the quartic in |V2|.
double closed_form_v2(double r, double x, double p, double q) {
  const double b = 2 * (r * p + x * q) - 1.0;
  const double c = (r * r + x * x) * (p * p + q * q);
  return std::sqrt((-b + std::sqrt(b * b - 4 * c)) / 2);
}

}  // namespace

TEST_CASE("two-bus power flow without load is flat") {
  const NetworkCase n = parse_case(pqtest::two_bus_text(0.01, 0.03, 0.0, 0.0, {{}}));
  const auto pf = ac_power_flow(n, normal_configuration(n), base_injections(n));
  REQUIRE(pf.converged);
  CHECK(pf.vm[0] == doctest::Approx(1.0));
  CHECK(pf.vm[1] == doctest::Approx(1.0));
  CHECK(std::abs(pf.va[1]) < 1e-12);
  CHECK(std::abs(pf.flows[0].p_from) < 1e-12);
  CHECK(std::abs(pf.losses_mw) < 1e-12);
}

TEST_CASE("two-bus power flow matches the closed form") {
  const NetworkCase n = parse_case(pqtest::two_bus_text(0.01, 0.03, 1.0, 0.5, {{}}));
  const auto pf = ac_power_flow(n, normal_configuration(n), base_injections(n));
  REQUIRE(pf.converged);
  CHECK(pf.mismatch <= 1e-8);
  const double v2 = closed_form_v2(0.01, 0.03, 1.0, 0.5);
  CHECK(std::abs(pf.vm[1] - v2) <= 1e-8);
  const double loss = 0.01 * (1.0 + 0.25) / (v2 * v2);
  CHECK(std::abs(pf.losses_mw - loss) <= 1e-8);
  CHECK(std::abs(pf.slack_p_mw - (1.0 + loss)) <= 1e-8);
  CHECK(std::abs(pf.slack_q_mvar - (0.5 + 3 * loss)) <= 1e-8);
}

TEST_CASE("power flow beyond the nose point does not converge") {
  const NetworkCase n = parse_case(pqtest::two_bus_text(0.01, 0.03, 40.0, 20.0, {{}}));
  const auto pf = ac_power_flow(n, normal_configuration(n), base_injections(n));
  CHECK_FALSE(pf.converged);
  CHECK(pf.mismatch > 1e-8);
}

TEST_CASE("backward-forward sweep agrees with Newton on radial cases") {
  std::mt19937 rng(17);
  for (int k = 0; k < 10; ++k) {
    const NetworkCase n = parse_case(pqtest::random_case_text(rng, 2 + k % 5));
    const auto c = normal_configuration(n);
    const auto nr = ac_power_flow(n, c, base_injections(n));
    const auto bfs = backward_forward_sweep(n, c, base_injections(n));
    REQUIRE(nr.converged);
    REQUIRE(bfs.converged);
    for (std::size_t i = 0; i < n.buses.size(); ++i) {
      CHECK(std::abs(nr.vm[i] - bfs.vm[i]) <= 1e-6);
      CHECK(std::abs(nr.va[i] - bfs.va[i]) <= 1e-6);
    }
    CHECK(std::abs(nr.losses_mw - bfs.losses_mw) <= 1e-6 * n.s_base);
  }
  const NetworkCase n = pqtest::bundled();
  const auto configs = enumerate_configurations(n);
  const auto& radial = find_configuration(configs, "NOP-open");
  const auto nr = ac_power_flow(n, radial, base_injections(n));
  const auto bfs = backward_forward_sweep(n, radial, base_injections(n));
  for (std::size_t i = 0; i < n.buses.size(); ++i) CHECK(std::abs(nr.vm[i] - bfs.vm[i]) <= 1e-6);
  CHECK_THROWS(backward_forward_sweep(n, find_configuration(configs, "NOP-closed"), base_injections(n)));
}

TEST_CASE("optimizer and oracle agree at optimal boundary points") {
  const NetworkCase n = pqtest::bundled();
  const auto configs = enumerate_configurations(n);
  for (const char* label : {"NOP-open", "NOP-closed"}) {
    const auto& c = find_configuration(configs, label);
    for (double th = 0.3; th < 6.28; th += 1.1) {
      const QcpProblem p = build_problem(n, c, ObjectiveSpec::boundary(std::cos(th), std::sin(th)));
      const QcpSolution s = solve(p, settings_for(n));
      REQUIRE(s.status == SolveStatus::Optimal);

      const Setpoints sp = setpoints_from_point(n, p, s.x);
      PowerFlowOptions opt;
      opt.v_ref = sp.v_ref;
      const auto pf = ac_power_flow(n, c, injections_from_point(n, p, s.x), opt);
      REQUIRE(pf.converged);
      const double ang = std::atan2(s.x[p.layout.f(0)], s.x[p.layout.e(0)]) - pf.va[0];
      for (std::size_t i = 0; i < n.buses.size(); ++i) {
        const int b = static_cast<int>(i);
        CHECK(std::abs(s.x[p.layout.e(b)] - pf.vm[i] * std::cos(pf.va[i] + ang)) <= 1e-6);
        CHECK(std::abs(s.x[p.layout.f(b)] - pf.vm[i] * std::sin(pf.va[i] + ang)) <= 1e-6);
      }
      const auto rep = verify_point(n, c, p, s);
      CHECK(rep.passed());
      CHECK(std::abs(rep.oracle_losses_mw - rep.optimizer_losses_mw) <= 1e-5 * n.s_base);
    }
  }
}

TEST_CASE("hand-edited voltage below the floor is named") {
  const NetworkCase n = pqtest::bundled();
  const auto c = normal_configuration(n);
  const QcpProblem p = build_problem(n, c, ObjectiveSpec::boundary(1, 0));
  const QcpSolution s = solve(p, settings_for(n));
  REQUIRE(s.status == SolveStatus::Optimal);
  REQUIRE(verify_point(n, c, p, s).passed());

  Vector x = s.x;
  const int b = static_cast<int>(n.bus_index(38));
  REQUIRE(n.buses[static_cast<std::size_t>(b)].v_min == 0.94);
  const double scale = 0.93 / std::hypot(x[p.layout.e(b)], x[p.layout.f(b)]);
  x[p.layout.e(b)] *= scale;
  x[p.layout.f(b)] *= scale;
  const auto rep = verify_point(n, c, p, x);
  CHECK_FALSE(rep.passed());
  const CheckResult* band = rep.find("voltage_band");
  REQUIRE(band != nullptr);
  CHECK_FALSE(band->passed);
  CHECK(std::find(band->offenders.begin(), band->offenders.end(), "bus 38") != band->offenders.end());
}

TEST_CASE("a forced solution outside the area fails verification") {
  const NetworkCase n = pqtest::bundled();
  const auto c = normal_configuration(n);
  const Point base = base_point(n, c);
  SolverSettings loose = settings_for(n);
  loose.tol_kkt = 1e-2;
  loose.max_iter = 30;
  loose.max_restorations = 0;
  const QcpProblem p = build_problem(n, c, ObjectiveSpec::min_cost({base.p + 6.0, base.q + 1.0}));
  const QcpSolution s = solve(p, loose);
  CHECK(s.status != SolveStatus::Optimal);
  const auto rep = verify_point(n, c, p, s.x);
  int failed = 0;
  for (const auto& chk : rep.checks) failed += chk.passed ? 0 : 1;
  CHECK(failed >= 1);
}

TEST_CASE("setpoint verification checks the interface pin") {
  const NetworkCase n = pqtest::bundled();
  const auto c = normal_configuration(n);
  const Point base = base_point(n, c);
  const QcpProblem p = build_problem(n, c, ObjectiveSpec::min_cost({base.p + 1.0, base.q - 0.5}));
  const QcpSolution s = solve(p, settings_for(n));
  REQUIRE(s.status == SolveStatus::Optimal);
  const Setpoints sp = setpoints_from_point(n, p, s.x);
  InterfacePin pin;
  pin.p_mw = base.p + 1.0;
  pin.q_mvar = base.q - 0.5;
  CHECK(verify_setpoints(n, c, sp, pin).passed());
  pin.p_mw = base.p + 1.1;
  const auto rep = verify_setpoints(n, c, sp, pin);
  CHECK_FALSE(rep.find("pinning")->passed);
  CHECK(rep.find("power_flow")->passed);
}
