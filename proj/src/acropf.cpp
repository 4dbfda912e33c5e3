#include "pqflex/acropf.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pqflex {

BranchFlow branch_flow(double e_i, double f_i, double e_j, double f_j, double g, double b) {
  const double vi2 = e_i * e_i + f_i * f_i;
  const double re = e_i * e_j + f_i * f_j;
  const double im = f_i * e_j - e_i * f_j;
  return {vi2 * g - re * g - im * b, -vi2 * b + re * b - im * g};
}

ObjectiveSpec ObjectiveSpec::boundary(double w_p, double w_q, std::optional<double> pinned_p_mw) {
  const double norm = std::hypot(w_p, w_q);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw std::invalid_argument("boundary direction (w_p, w_q) must be nonzero");
  ObjectiveSpec s;
  s.kind = Kind::BoundaryDirection;
  s.w_p = w_p / norm;
  s.w_q = w_q / norm;
  s.pinned_p_mw = pinned_p_mw;
  return s;
}

ObjectiveSpec ObjectiveSpec::min_cost(TargetPoint target) {
  if (!std::isfinite(target.p_mw) || !std::isfinite(target.q_mvar))
    throw std::invalid_argument("target point must be finite");
  ObjectiveSpec s;
  s.kind = Kind::MinCost;
  s.target = target;
  return s;
}

std::string LimitTag::str() const {
  switch (kind) {
    case LimitKind::Thermal:
      return "smax:" + element;
    case LimitKind::VoltageMin:
      return "vmin:" + element;
    case LimitKind::VoltageMax:
      return "vmax:" + element;
  }
  return element;
}

std::vector<std::string> QcpProblem::binding_tags(const Vector& x, double tol) const {
  std::vector<std::string> out;
  for (std::size_t r = 0; r < inequality_rows.size(); ++r)
    if (inequality_rows[r].eval(x) < tol) out.push_back(limit_tags[r].str());
  return out;
}

double QcpProblem::flex_cost(const Vector& x) const {
  double cost = 0.0;
  for (const auto& [i, a] : cost_terms) cost += a * x[i];
  return cost;
}

namespace {

void add_flow_rows(QcpProblem& qp, int l, int from, int to, const Admittance& y, const std::string& name) {
  const auto& L = qp.layout;
  const double g = y.g, b = y.b;
  auto flow = [&](int i, int j, int p_var, int q_var, const std::string& dir) {
    const int ei = L.e(i), fi = L.f(i), ej = L.e(j), fj = L.f(j);
    QuadForm p;
    p.linear = {{p_var, 1.0}};
    p.quad = {{ei, ei, -g}, {fi, fi, -g}, {ei, ej, g}, {fi, fj, g}, {fi, ej, b}, {ei, fj, -b}};
    QuadForm q;
    q.linear = {{q_var, 1.0}};
    q.quad = {{ei, ei, b}, {fi, fi, b}, {ei, ej, -b}, {fi, fj, -b}, {fi, ej, g}, {ei, fj, -g}};
    qp.equality_rows.push_back(std::move(p));
    qp.equality_names.push_back("pflow:" + dir);
    qp.equality_rows.push_back(std::move(q));
    qp.equality_names.push_back("qflow:" + dir);
  };
  flow(from, to, L.p_from(l), L.q_from(l), name);
  const auto dash = name.find('-');
  flow(to, from, L.p_to(l), L.q_to(l), name.substr(dash + 1) + "-" + name.substr(0, dash));
}

}  // namespace

QcpProblem build_problem(const NetworkCase& network, const Configuration& config, const ObjectiveSpec& spec) {
  if (!is_connected(network, config))
    throw std::invalid_argument(fmt::format("configuration '{}' leaves buses isolated", config.label));
  if (spec.kind == ObjectiveSpec::Kind::MinCost && !spec.target)
    throw std::invalid_argument("MinCost objective requires a target point");
  if (spec.kind == ObjectiveSpec::Kind::BoundaryDirection && spec.w_p == 0.0 && spec.w_q == 0.0)
    throw std::invalid_argument("boundary direction (w_p, w_q) must be nonzero");

  QcpProblem qp;
  qp.spec = spec;
  qp.case_name = network.name;
  qp.config_label = config.label;
  qp.s_base = network.s_base;
  qp.ref_gen = static_cast<int>(network.reference_generator());

  VariableLayout& L = qp.layout;
  L.lines = effective_topology(network, config);
  L.n_bus = static_cast<int>(network.buses.size());
  L.n_line = static_cast<int>(L.lines.size());
  L.n_gen = static_cast<int>(network.generators.size());
  L.n_flex = static_cast<int>(network.flex_units.size());
  qp.resize(L.size());

  // Bounds and flat start.
  double total_p = 0.0, total_q = 0.0;
  for (int k = 0; k < L.n_bus; ++k) {
    const Bus& bus = network.buses[static_cast<std::size_t>(k)];
    qp.start[L.e(k)] = std::clamp(1.0, bus.v_min, bus.v_max);
    total_p += bus.p_d;
    total_q += bus.q_d;
  }
  for (int g = 0; g < L.n_gen; ++g) {
    const Generator& gen = network.generators[static_cast<std::size_t>(g)];
    qp.lower[L.p_gen(g)] = gen.p_min;
    qp.upper[L.p_gen(g)] = gen.p_max;
    qp.lower[L.q_gen(g)] = gen.q_min;
    qp.upper[L.q_gen(g)] = gen.q_max;
    const bool ref = g == qp.ref_gen;
    qp.start[L.p_gen(g)] = std::clamp(ref ? total_p : 0.0, gen.p_min, gen.p_max);
    qp.start[L.q_gen(g)] = std::clamp(ref ? total_q : 0.0, gen.q_min, gen.q_max);
  }
  for (int u = 0; u < L.n_flex; ++u) {
    const FlexUnit& fu = network.flex_units[static_cast<std::size_t>(u)];
    const int idx[4] = {L.p_up(u), L.p_dn(u), L.q_up(u), L.q_dn(u)};
    const double cap[4] = {fu.p_up_max, fu.p_dn_max, fu.q_up_max, fu.q_dn_max};
    for (int a = 0; a < 4; ++a) {
      qp.lower[idx[a]] = 0.0;
      qp.upper[idx[a]] = cap[a];
    }
  }

  // Flow definitions.
  std::vector<std::vector<std::pair<int, bool>>> incident(static_cast<std::size_t>(L.n_bus));
  for (int l = 0; l < L.n_line; ++l) {
    const Line& line = network.lines[L.lines[static_cast<std::size_t>(l)]];
    const int from = static_cast<int>(network.bus_index(line.from_bus));
    const int to = static_cast<int>(network.bus_index(line.to_bus));
    add_flow_rows(qp, l, from, to, line_admittance(line), line.name());
    incident[static_cast<std::size_t>(from)].emplace_back(l, true);
    incident[static_cast<std::size_t>(to)].emplace_back(l, false);
  }

  // Nodal balances: generation - demand + net flex - outgoing flows = 0.
  for (int pass = 0; pass < 2; ++pass) {
    const bool active = pass == 0;
    for (int k = 0; k < L.n_bus; ++k) {
      const Bus& bus = network.buses[static_cast<std::size_t>(k)];
      QuadForm row;
      row.constant = active ? -bus.p_d : -bus.q_d;
      for (int g = 0; g < L.n_gen; ++g)
        if (network.generators[static_cast<std::size_t>(g)].bus == bus.id)
          row.linear.emplace_back(active ? L.p_gen(g) : L.q_gen(g), 1.0);
      for (int u = 0; u < L.n_flex; ++u) {
        if (network.flex_units[static_cast<std::size_t>(u)].bus != bus.id) continue;
        row.linear.emplace_back(active ? L.p_up(u) : L.q_up(u), 1.0);
        row.linear.emplace_back(active ? L.p_dn(u) : L.q_dn(u), -1.0);
      }
      for (const auto& [l, from_end] : incident[static_cast<std::size_t>(k)]) {
        const int var = active ? (from_end ? L.p_from(l) : L.p_to(l)) : (from_end ? L.q_from(l) : L.q_to(l));
        row.linear.emplace_back(var, -1.0);
      }
      qp.equality_rows.push_back(std::move(row));
      qp.equality_names.push_back(fmt::format("{}bal:{}", active ? 'p' : 'q', bus.id));
    }
  }

  const int ref = static_cast<int>(network.ref_index());
  {
    QuadForm row;
    row.linear = {{L.f(ref), 1.0}};
    qp.equality_rows.push_back(std::move(row));
    qp.equality_names.push_back("angle_ref");
  }
  auto pin = [&](int var, double value_mw, const char* name) {
    QuadForm row;
    row.linear = {{var, 1.0}};
    row.constant = -network.to_pu_power(value_mw);
    qp.equality_rows.push_back(std::move(row));
    qp.equality_names.push_back(name);
  };
  if (spec.kind == ObjectiveSpec::Kind::MinCost) {
    pin(L.p_gen(qp.ref_gen), spec.target->p_mw, "pin_p");
    pin(L.q_gen(qp.ref_gen), spec.target->q_mvar, "pin_q");
  } else if (spec.pinned_p_mw) {
    pin(L.p_gen(qp.ref_gen), *spec.pinned_p_mw, "pin_p");
  }

  // Thermal limits at both ends, then the voltage band.
  for (int l = 0; l < L.n_line; ++l) {
    const Line& line = network.lines[L.lines[static_cast<std::size_t>(l)]];
    const double s2 = line.s_max * line.s_max;
    const std::string fwd = line.name();
    const std::string rev = fmt::format("{}-{}", line.to_bus, line.from_bus);
    QuadForm a;
    a.constant = s2;
    a.quad = {{L.p_from(l), L.p_from(l), -1.0}, {L.q_from(l), L.q_from(l), -1.0}};
    QuadForm b;
    b.constant = s2;
    b.quad = {{L.p_to(l), L.p_to(l), -1.0}, {L.q_to(l), L.q_to(l), -1.0}};
    qp.inequality_rows.push_back(std::move(a));
    qp.limit_tags.push_back({LimitKind::Thermal, fwd});
    qp.inequality_rows.push_back(std::move(b));
    qp.limit_tags.push_back({LimitKind::Thermal, rev});
  }
  for (int k = 0; k < L.n_bus; ++k) {
    const Bus& bus = network.buses[static_cast<std::size_t>(k)];
    QuadForm lo;
    lo.constant = -bus.v_min * bus.v_min;
    lo.quad = {{L.e(k), L.e(k), 1.0}, {L.f(k), L.f(k), 1.0}};
    QuadForm hi;
    hi.constant = bus.v_max * bus.v_max;
    hi.quad = {{L.e(k), L.e(k), -1.0}, {L.f(k), L.f(k), -1.0}};
    qp.inequality_rows.push_back(std::move(lo));
    qp.limit_tags.push_back({LimitKind::VoltageMin, std::to_string(bus.id)});
    qp.inequality_rows.push_back(std::move(hi));
    qp.limit_tags.push_back({LimitKind::VoltageMax, std::to_string(bus.id)});
  }

  for (int u = 0; u < L.n_flex; ++u) {
    const FlexUnit& fu = network.flex_units[static_cast<std::size_t>(u)];
    const double cp = fu.cost_p * network.s_base;
    const double cq = fu.cost_q * network.s_base;
    qp.cost_terms.emplace_back(L.p_up(u), cp);
    qp.cost_terms.emplace_back(L.p_dn(u), cp);
    qp.cost_terms.emplace_back(L.q_up(u), cq);
    qp.cost_terms.emplace_back(L.q_dn(u), cq);
  }
  if (spec.kind == ObjectiveSpec::Kind::MinCost) {
    qp.objective_form.linear = qp.cost_terms;
  } else {
    qp.objective_form.linear = {{L.p_gen(qp.ref_gen), spec.w_p}, {L.q_gen(qp.ref_gen), spec.w_q}};
  }
  return qp;
}

namespace {

void check_point(const QcpProblem& problem, const Vector& x) {
  if (x.size() != problem.layout.size())
    throw std::invalid_argument(fmt::format("point has {} entries, layout needs {}", x.size(), problem.layout.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) throw std::invalid_argument(fmt::format("non-finite entry at index {}", i));
}

}  // namespace

Residuals eval_residuals(const QcpProblem& problem, const Vector& x) {
  check_point(problem, x);
  return {problem.equalities(x), problem.inequalities(x), problem.objective(x)};
}

Derivatives eval_derivatives(const QcpProblem& problem, const Vector& x, const Vector& y, const Vector& z) {
  check_point(problem, x);
  return {problem.gradient(x), problem.equality_jacobian(x), problem.inequality_jacobian(x),
          problem.lagrangian_hessian(x, 1.0, y, z)};
}

Derivatives eval_derivatives(const QcpProblem& problem, const Vector& x) {
  return eval_derivatives(problem, x, Vector::Ones(problem.num_equalities()), Vector::Ones(problem.num_inequalities()));
}

}  // namespace pqflex
