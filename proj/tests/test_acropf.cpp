#include <doctest.h>

#include <random>
#include <set>

#include "fd_check.hpp"
#include "pqflex/acropf.hpp"
#include "pqflex/config.hpp"
#include "support.hpp"

using namespace pqflex;

TEST_CASE("branch_flow examples") {
  for (auto [g, b] : {std::pair{2.0, -6.0}, std::pair{0.3, 1.7}}) {
    const auto f = branch_flow(1, 0, 1, 0, g, b);
    CHECK(f.p == doctest::Approx(0.0));
    CHECK(f.q == doctest::Approx(0.0));
  }
  const auto f = branch_flow(1, 0, 0.95, -0.05, 2, -6);
  CHECK(f.p == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(f.q == doctest::Approx(0.2).epsilon(1e-12));
  const auto r = branch_flow(0.95, -0.05, 1, 0, 2, -6);
  CHECK(f.p + r.p >= 0.0);
  // |u_i - u_j|^2 G is the series loss.
  CHECK(f.p + r.p == doctest::Approx((0.05 * 0.05 + 0.05 * 0.05) * 2).epsilon(1e-12));
}

TEST_CASE("series losses are nonnegative for random voltages") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const double ei = 1 + 0.1 * U(rng), fi = 0.1 * U(rng), ej = 1 + 0.1 * U(rng), fj = 0.1 * U(rng);
    const auto y = line_admittance(Line{1, 2, 0.5 + 0.5 * U(rng), U(rng), 1.0});
    CHECK(branch_flow(ei, fi, ej, fj, y.g, y.b).p + branch_flow(ej, fj, ei, fi, y.g, y.b).p >= -1e-15);
  }
}

TEST_CASE("bundled NOP-open problem dimensions") {
  const NetworkCase n = pqtest::bundled();
  const auto configs = enumerate_configurations(n);
  const QcpProblem p = build_problem(n, find_configuration(configs, "NOP-open"), ObjectiveSpec::boundary(1, 0));
  const auto& L = p.layout;
  CHECK(L.n_bus == 38);
  CHECK(L.n_line == 37);
  CHECK(L.n_gen == 1);
  CHECK(L.n_flex == 4);
  CHECK(L.size() == 2 * 38 + 4 * 37 + 2 + 16);
  CHECK(p.num_variables() == L.size());
  CHECK(p.num_equalities() == 4 * 37 + 2 * 38 + 1);
  CHECK(p.num_inequalities() == 2 * 37 + 2 * 38);

  std::set<int> slots;
  for (int b = 0; b < L.n_bus; ++b) slots.insert({L.e(b), L.f(b)});
  for (int l = 0; l < L.n_line; ++l) slots.insert({L.p_from(l), L.q_from(l), L.p_to(l), L.q_to(l)});
  for (int g = 0; g < L.n_gen; ++g) slots.insert({L.p_gen(g), L.q_gen(g)});
  for (int u = 0; u < L.n_flex; ++u) slots.insert({L.p_up(u), L.p_dn(u), L.q_up(u), L.q_dn(u)});
  CHECK(static_cast<int>(slots.size()) == L.size());
  CHECK(*slots.begin() == 0);
  CHECK(*slots.rbegin() == L.size() - 1);

  const QcpProblem mc = build_problem(n, configs[0], ObjectiveSpec::min_cost({1.0, 0.5}));
  CHECK(mc.num_equalities() == p.num_equalities() + 2);
  const QcpProblem pinned = build_problem(n, configs[0], ObjectiveSpec::boundary(0, 1, 1.0));
  CHECK(pinned.num_equalities() == p.num_equalities() + 1);
}

TEST_CASE("objective construction") {
  const auto s = ObjectiveSpec::boundary(3, 4);
  CHECK(s.w_p == doctest::Approx(0.6));
  CHECK(s.w_q == doctest::Approx(0.8));
  CHECK_THROWS_AS(ObjectiveSpec::boundary(0, 0), std::invalid_argument);

  const NetworkCase two = parse_case(pqtest::two_bus_text(0.01, 0.03, 1, 0.5, {{}}));
  ObjectiveSpec bad;
  bad.kind = ObjectiveSpec::Kind::MinCost;
  CHECK_THROWS_AS(build_problem(two, normal_configuration(two), bad), std::invalid_argument);
  std::string text = pqtest::two_bus_text(0.01, 0.03, 1, 0.5, {{}});
  text.replace(text.find("false, true"), 11, "true, true");
  const NetworkCase sw = parse_case(text);
  CHECK_THROWS_AS(build_problem(sw, make_configuration(sw, {{0, false}}), ObjectiveSpec::boundary(1, 0)),
                  std::invalid_argument);
}

TEST_CASE("flat-start residuals are the net nodal injections") {
  const NetworkCase two = parse_case(pqtest::two_bus_text(0.01, 0.03, 1.0, 0.5, {{}}));
  const QcpProblem p = build_problem(two, normal_configuration(two), ObjectiveSpec::boundary(1, 0));
  const Residuals r = eval_residuals(p, p.start);
  for (int i = 0; i < r.equality.size(); ++i) {
    const std::string& name = p.equality_names[static_cast<std::size_t>(i)];
    double expect = 0.0;
    if (name == "pbal:1") expect = 1.0;
    if (name == "qbal:1") expect = 0.5;
    if (name == "pbal:2") expect = -1.0;
    if (name == "qbal:2") expect = -0.5;
    CHECK_MESSAGE(r.equality[i] == doctest::Approx(expect), name);
  }
  Vector bad = p.start;
  bad[0] = std::nan("");
  CHECK_THROWS_AS(eval_residuals(p, bad), std::invalid_argument);
  CHECK_THROWS_AS(eval_residuals(p, Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("derivatives match central differences at random points") {
  const NetworkCase n = pqtest::bundled();
  const auto configs = enumerate_configurations(n);
  std::mt19937 rng(11);
  std::normal_distribution<double> N(0.0, 1.0);
  for (const auto& spec : {ObjectiveSpec::boundary(0.3, -0.7, 1.5), ObjectiveSpec::min_cost({2.0, 0.5})}) {
    const QcpProblem p = build_problem(n, find_configuration(configs, "NOP-closed"), spec);
    for (int k = 0; k < 5; ++k) {
      const Vector x = pqtest::random_point(p, rng);
      Vector y(p.num_equalities()), z(p.num_inequalities());
      for (auto& v : y) v = N(rng);
      for (auto& v : z) v = std::abs(N(rng));
      const auto e = pqtest::fd_errors(p, x, y, z);
      CHECK(e.gradient <= 1e-6);
      CHECK(e.eq_jacobian <= 1e-6);
      CHECK(e.ineq_jacobian <= 1e-6);
      CHECK(e.hessian <= 1e-6);
    }
  }
}

TEST_CASE("constraint Hessians are constant") {
  const NetworkCase n = pqtest::bundled();
  const QcpProblem p = build_problem(n, normal_configuration(n), ObjectiveSpec::boundary(1, 0));
  std::mt19937 rng(5);
  const Derivatives a = eval_derivatives(p, pqtest::random_point(p, rng));
  const Derivatives b = eval_derivatives(p, pqtest::random_point(p, rng));
  CHECK((Eigen::MatrixXd(a.hessian) - Eigen::MatrixXd(b.hessian)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.equality_jacobian.nonZeros() == b.equality_jacobian.nonZeros());
}

TEST_CASE("MinCost objective is invariant under permuting identical units") {
  NetworkCase n = pqtest::bundled();
  for (auto& u : n.flex_units) {
    u.cost_p = 0.03;
    u.cost_q = 0.01;
  }
  const auto config = normal_configuration(n);
  const QcpProblem p = build_problem(n, config, ObjectiveSpec::min_cost({1.0, 1.0}));
  std::mt19937 rng(9);
  Vector x = pqtest::random_point(p, rng);
  const double before = p.objective(x);
  const auto& L = p.layout;
  for (int k = 0; k < 4; ++k) std::swap(x[L.p_up(0) + k], x[L.p_up(3) + k]);
  CHECK(p.objective(x) == doctest::Approx(before).epsilon(1e-14));
}
