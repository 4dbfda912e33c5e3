#include "pqflex/oracle.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <queue>
#include <stdexcept>

#include "pqflex/acropf.hpp"
#include "pqflex/ipm.hpp"

namespace pqflex {

namespace {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

struct Branch {
  std::size_t line;
  std::size_t from;
  std::size_t to;
  Complex y;
};

std::vector<Branch> in_service(const NetworkCase& network, const Configuration& config) {
  std::vector<Branch> out;
  for (std::size_t k = 0; k < network.lines.size(); ++k) {
    if (!config.line_on(network, k)) continue;
    const Line& l = network.lines[k];
    out.push_back({k, network.bus_index(l.from_bus), network.bus_index(l.to_bus), 1.0 / Complex(l.r, l.x)});
  }
  return out;
}

CMatrix admittance_matrix(std::size_t nb, const std::vector<Branch>& branches) {
  CMatrix Y = CMatrix::Zero(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));
  for (const auto& br : branches) {
    const auto f = static_cast<Eigen::Index>(br.from);
    const auto t = static_cast<Eigen::Index>(br.to);
    Y(f, f) += br.y;
    Y(t, t) += br.y;
    Y(f, t) -= br.y;
    Y(t, f) -= br.y;
  }
  return Y;
}

// Fills flows, losses, slack injection and mismatch from a voltage vector.
void finalize(const NetworkCase& network, const std::vector<Branch>& branches, const CMatrix& Y, const CVector& V,
              const std::vector<BusInjection>& inj, std::size_t ref, PowerFlowResult& r) {
  const auto nb = static_cast<std::size_t>(V.size());
  r.vm.resize(nb);
  r.va.resize(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    r.vm[i] = std::abs(V[static_cast<Eigen::Index>(i)]);
    r.va[i] = std::arg(V[static_cast<Eigen::Index>(i)]);
  }
  const CVector S = V.cwiseProduct((Y * V).conjugate());
  double mismatch = 0.0;
  for (std::size_t i = 0; i < nb; ++i) {
    if (i == ref) continue;
    const Complex d = S[static_cast<Eigen::Index>(i)] - Complex(inj[i].p, inj[i].q);
    mismatch = std::max({mismatch, std::abs(d.real()), std::abs(d.imag())});
    if (!std::isfinite(d.real()) || !std::isfinite(d.imag())) mismatch = std::numeric_limits<double>::infinity();
  }
  r.mismatch = mismatch;
  r.slack_p_mw = network.to_mw(S[static_cast<Eigen::Index>(ref)].real());
  r.slack_q_mvar = network.to_mw(S[static_cast<Eigen::Index>(ref)].imag());
  r.flows.clear();
  double losses = 0.0;
  for (const auto& br : branches) {
    const Complex vf = V[static_cast<Eigen::Index>(br.from)];
    const Complex vt = V[static_cast<Eigen::Index>(br.to)];
    const Complex sft = vf * std::conj(br.y * (vf - vt));
    const Complex stf = vt * std::conj(br.y * (vt - vf));
    losses += sft.real() + stf.real();
    r.flows.push_back({br.line, network.to_mw(sft.real()), network.to_mw(sft.imag()), network.to_mw(stf.real()),
                       network.to_mw(stf.imag())});
  }
  r.losses_mw = network.to_mw(losses);
}

void check_injections(const NetworkCase& network, const std::vector<BusInjection>& injections) {
  if (injections.size() != network.buses.size())
    throw std::invalid_argument(
        fmt::format("expected {} bus injections, got {}", network.buses.size(), injections.size()));
}

}  // namespace

std::vector<BusInjection> base_injections(const NetworkCase& network) {
  std::vector<BusInjection> inj(network.buses.size());
  for (std::size_t i = 0; i < network.buses.size(); ++i) inj[i] = {-network.buses[i].p_d, -network.buses[i].q_d};
  for (const auto& g : network.generators) {
    if (g.is_reference) continue;
    auto& b = inj[network.bus_index(g.bus)];
    b.p += std::clamp(0.0, g.p_min, g.p_max);
    b.q += std::clamp(0.0, g.q_min, g.q_max);
  }
  return inj;
}

PowerFlowResult ac_power_flow(const NetworkCase& network, const Configuration& config,
                              const std::vector<BusInjection>& injections, const PowerFlowOptions& options) {
  check_injections(network, injections);
  const std::size_t nb = network.buses.size();
  const std::size_t ref = network.ref_index();
  const auto branches = in_service(network, config);
  const CMatrix Y = admittance_matrix(nb, branches);

  std::vector<std::size_t> pq;
  for (std::size_t i = 0; i < nb; ++i)
    if (i != ref) pq.push_back(i);
  const auto npq = static_cast<Eigen::Index>(pq.size());

  Eigen::VectorXd vm = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(nb));
  Eigen::VectorXd va = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nb));
  vm[static_cast<Eigen::Index>(ref)] = options.v_ref;
  auto voltage = [&] {
    CVector V(static_cast<Eigen::Index>(nb));
    for (Eigen::Index i = 0; i < V.size(); ++i) V[i] = std::polar(vm[i], va[i]);
    return V;
  };

  PowerFlowResult r;
  for (int it = 0;; ++it) {
    const CVector V = voltage();
    const CVector I = Y * V;
    const CVector S = V.cwiseProduct(I.conjugate());
    Eigen::VectorXd F(2 * npq);
    for (Eigen::Index k = 0; k < npq; ++k) {
      const auto i = static_cast<Eigen::Index>(pq[static_cast<std::size_t>(k)]);
      F[k] = S[i].real() - injections[static_cast<std::size_t>(i)].p;
      F[npq + k] = S[i].imag() - injections[static_cast<std::size_t>(i)].q;
    }
    const double norm = npq ? F.lpNorm<Eigen::Infinity>() : 0.0;
    r.iterations = it;
    if (norm <= options.tol) {
      r.converged = true;
      break;
    }
    if (it >= options.max_iter || !std::isfinite(norm)) break;

    // dS/dVa = j diag(V) conj(diag(I) - Y diag(V)); dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
    const CVector Vn = V.cwiseQuotient(vm.cast<Complex>());
    CMatrix dVa = -(Y * V.asDiagonal().toDenseMatrix());
    dVa.diagonal() += I;
    dVa = (Complex(0, 1) * V).asDiagonal() * dVa.conjugate();
    CMatrix dVm = V.asDiagonal() * (Y * Vn.asDiagonal().toDenseMatrix()).conjugate();
    dVm.diagonal() += I.conjugate().cwiseProduct(Vn);

    Eigen::MatrixXd J(2 * npq, 2 * npq);
    for (Eigen::Index a = 0; a < npq; ++a) {
      const auto i = static_cast<Eigen::Index>(pq[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < npq; ++b) {
        const auto j = static_cast<Eigen::Index>(pq[static_cast<std::size_t>(b)]);
        J(a, b) = dVa(i, j).real();
        J(a, npq + b) = dVm(i, j).real();
        J(npq + a, b) = dVa(i, j).imag();
        J(npq + a, npq + b) = dVm(i, j).imag();
      }
    }
    const Eigen::VectorXd dx = J.partialPivLu().solve(-F);
    for (Eigen::Index k = 0; k < npq; ++k) {
      const auto i = static_cast<Eigen::Index>(pq[static_cast<std::size_t>(k)]);
      va[i] += dx[k];
      vm[i] += dx[npq + k];
    }
  }
  finalize(network, branches, Y, voltage(), injections, ref, r);
  r.converged = r.converged && r.mismatch <= std::max(options.tol, 1e-8);
  return r;
}

PowerFlowResult backward_forward_sweep(const NetworkCase& network, const Configuration& config,
                                       const std::vector<BusInjection>& injections, const PowerFlowOptions& options) {
  check_injections(network, injections);
  const std::size_t nb = network.buses.size();
  const std::size_t ref = network.ref_index();
  const auto branches = in_service(network, config);
  if (branches.size() + 1 != nb) throw std::invalid_argument("backward-forward sweep needs a radial configuration");

  // Orient the tree away from the reference bus.
  std::vector<std::vector<std::size_t>> adj(nb);
  for (std::size_t k = 0; k < branches.size(); ++k) {
    adj[branches[k].from].push_back(k);
    adj[branches[k].to].push_back(k);
  }
  std::vector<std::size_t> order{ref};
  std::vector<long> parent_branch(nb, -1);
  std::vector<std::size_t> parent(nb, nb);
  std::vector<bool> seen(nb, false);
  seen[ref] = true;
  for (std::size_t head = 0; head < order.size(); ++head) {
    const std::size_t b = order[head];
    for (std::size_t k : adj[b]) {
      const std::size_t other = branches[k].from == b ? branches[k].to : branches[k].from;
      if (seen[other]) continue;
      seen[other] = true;
      parent[other] = b;
      parent_branch[other] = static_cast<long>(k);
      order.push_back(other);
    }
  }
  if (order.size() != nb) throw std::invalid_argument("configuration is not connected");

  CVector V = CVector::Constant(static_cast<Eigen::Index>(nb), Complex(options.v_ref, 0.0));
  std::vector<Complex> J(nb);
  PowerFlowResult r;
  for (int it = 1; it <= options.max_iter * 20; ++it) {
    std::fill(J.begin(), J.end(), Complex{});
    for (auto pos = order.size(); pos-- > 1;) {
      const std::size_t b = order[pos];
      const Complex s(injections[b].p, injections[b].q);
      J[b] += -std::conj(s / V[static_cast<Eigen::Index>(b)]);
      J[parent[b]] += J[b];
    }
    double change = 0.0;
    for (std::size_t pos = 1; pos < order.size(); ++pos) {
      const std::size_t b = order[pos];
      const Complex z = 1.0 / branches[static_cast<std::size_t>(parent_branch[b])].y;
      const Complex v_new = V[static_cast<Eigen::Index>(parent[b])] - z * J[b];
      change = std::max(change, std::abs(v_new - V[static_cast<Eigen::Index>(b)]));
      V[static_cast<Eigen::Index>(b)] = v_new;
    }
    r.iterations = it;
    if (change <= options.tol * 1e-2) {
      r.converged = true;
      break;
    }
  }
  finalize(network, branches, admittance_matrix(nb, branches), V, injections, ref, r);
  r.converged = r.converged && r.mismatch <= std::max(options.tol, 1e-8);
  return r;
}

bool VerificationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult* VerificationReport::find(const std::string& family) const {
  for (const auto& c : checks)
    if (c.family == family) return &c;
  return nullptr;
}

Setpoints setpoints_from_point(const NetworkCase& network, const QcpProblem& problem, const Vector& x) {
  const auto& L = problem.layout;
  const auto ref = static_cast<int>(network.ref_index());
  Setpoints sp;
  sp.v_ref = std::hypot(x[L.e(ref)], x[L.f(ref)]);
  for (int g = 0; g < L.n_gen; ++g) {
    sp.gen_p_mw.push_back(network.to_mw(x[L.p_gen(g)]));
    sp.gen_q_mvar.push_back(network.to_mw(x[L.q_gen(g)]));
  }
  for (int u = 0; u < L.n_flex; ++u)
    sp.units.push_back({network.to_mw(x[L.p_up(u)]), network.to_mw(x[L.p_dn(u)]), network.to_mw(x[L.q_up(u)]),
                        network.to_mw(x[L.q_dn(u)])});
  return sp;
}

std::vector<BusInjection> injections_from_setpoints(const NetworkCase& network, const Setpoints& sp) {
  if (sp.gen_p_mw.size() != network.generators.size() || sp.gen_q_mvar.size() != network.generators.size() ||
      sp.units.size() != network.flex_units.size())
    throw std::invalid_argument("setpoints do not match the case");
  std::vector<BusInjection> inj(network.buses.size());
  for (std::size_t i = 0; i < network.buses.size(); ++i) inj[i] = {-network.buses[i].p_d, -network.buses[i].q_d};
  for (std::size_t g = 0; g < network.generators.size(); ++g) {
    if (network.generators[g].is_reference) continue;
    auto& b = inj[network.bus_index(network.generators[g].bus)];
    b.p += network.to_pu_power(sp.gen_p_mw[g]);
    b.q += network.to_pu_power(sp.gen_q_mvar[g]);
  }
  for (std::size_t u = 0; u < network.flex_units.size(); ++u) {
    auto& b = inj[network.bus_index(network.flex_units[u].bus)];
    const auto& r = sp.units[u];
    b.p += network.to_pu_power(r[0] - r[1]);
    b.q += network.to_pu_power(r[2] - r[3]);
  }
  return inj;
}

std::vector<BusInjection> injections_from_point(const NetworkCase& network, const QcpProblem& problem,
                                                const Vector& x) {
  return injections_from_setpoints(network, setpoints_from_point(network, problem, x));
}

namespace {

void note(CheckResult& c, double violation, const std::string& who, double tol) {
  c.worst = std::max(c.worst, violation);
  if (violation > tol) {
    c.passed = false;
    if (std::find(c.offenders.begin(), c.offenders.end(), who) == c.offenders.end()) c.offenders.push_back(who);
  }
}

CheckResult& family(VerificationReport& rep, const std::string& name) {
  for (auto& c : rep.checks)
    if (c.family == name) return c;
  rep.checks.push_back(CheckResult{});
  rep.checks.back().family = name;
  return rep.checks.back();
}

}  // namespace

VerificationReport verify_setpoints(const NetworkCase& network, const Configuration& config, const Setpoints& sp,
                                    const InterfacePin& pin, double tol) {
  PowerFlowOptions opt;
  opt.v_ref = sp.v_ref;
  VerificationReport rep;
  rep.flow = ac_power_flow(network, config, injections_from_setpoints(network, sp), opt);
  const PowerFlowResult& pf = rep.flow;
  rep.oracle_losses_mw = pf.losses_mw;

  CheckResult& conv = family(rep, "power_flow");
  conv.passed = pf.converged;
  conv.worst = pf.mismatch;
  if (!pf.converged) conv.offenders.push_back(fmt::format("mismatch {:.3e}", pf.mismatch));

  CheckResult& vband = family(rep, "voltage_band");
  for (std::size_t i = 0; i < network.buses.size(); ++i) {
    const Bus& bus = network.buses[i];
    note(vband, std::max({bus.v_min - pf.vm[i], pf.vm[i] - bus.v_max, 0.0}), fmt::format("bus {}", bus.id), tol);
  }

  CheckResult& thermal = family(rep, "thermal");
  for (const auto& fl : pf.flows) {
    const Line& line = network.lines[fl.line];
    note(thermal, network.to_pu_power(std::hypot(fl.p_from, fl.q_from)) - line.s_max, line.name(), tol);
    note(thermal, network.to_pu_power(std::hypot(fl.p_to, fl.q_to)) - line.s_max,
         fmt::format("{}-{}", line.to_bus, line.from_bus), tol);
  }

  CheckResult& flex = family(rep, "flex_bounds");
  for (std::size_t u = 0; u < network.flex_units.size(); ++u) {
    const FlexUnit& fu = network.flex_units[u];
    const double caps[4] = {fu.p_up_max, fu.p_dn_max, fu.q_up_max, fu.q_dn_max};
    for (int k = 0; k < 4; ++k) {
      const double v = network.to_pu_power(sp.units[u][static_cast<std::size_t>(k)]);
      note(flex, std::max({-v, v - caps[k], 0.0}), fu.label, tol);
    }
  }

  CheckResult& gens = family(rep, "generator_bounds");
  for (std::size_t g = 0; g < network.generators.size(); ++g) {
    const Generator& gen = network.generators[g];
    double p = network.to_pu_power(sp.gen_p_mw[g]), q = network.to_pu_power(sp.gen_q_mvar[g]);
    if (gen.is_reference) {
      p = network.to_pu_power(pf.slack_p_mw);
      q = network.to_pu_power(pf.slack_q_mvar);
    }
    const auto who = fmt::format("generator at bus {}", gen.bus);
    note(gens, std::max({gen.p_min - p, p - gen.p_max, 0.0}), who, tol);
    note(gens, std::max({gen.q_min - q, q - gen.q_max, 0.0}), who, tol);
  }

  CheckResult& pinning = family(rep, "pinning");
  if (pin.p_mw) note(pinning, network.to_pu_power(std::abs(pf.slack_p_mw - *pin.p_mw)), "interface P", tol);
  if (pin.q_mvar) note(pinning, network.to_pu_power(std::abs(pf.slack_q_mvar - *pin.q_mvar)), "interface Q", tol);
  return rep;
}

VerificationReport verify_point(const NetworkCase& network, const Configuration& config, const QcpProblem& problem,
                                const Vector& x, double tol) {
  const auto& L = problem.layout;
  InterfacePin pin;
  if (problem.spec.kind == ObjectiveSpec::Kind::MinCost && problem.spec.target) {
    pin.p_mw = problem.spec.target->p_mw;
    pin.q_mvar = problem.spec.target->q_mvar;
  } else if (problem.spec.pinned_p_mw) {
    pin.p_mw = problem.spec.pinned_p_mw;
  }
  VerificationReport rep = verify_setpoints(network, config, setpoints_from_point(network, problem, x), pin, tol);
  const PowerFlowResult& pf = rep.flow;

  // The optimizer's own voltages must respect the band too.
  CheckResult& vband = family(rep, "voltage_band");
  const std::size_t ref = network.ref_index();
  const double angle_ref = std::atan2(x[L.f(static_cast<int>(ref))], x[L.e(static_cast<int>(ref))]);
  CheckResult& agree = family(rep, "agreement");
  for (std::size_t i = 0; i < network.buses.size(); ++i) {
    const Bus& bus = network.buses[i];
    const Complex u_opt(x[L.e(static_cast<int>(i))], x[L.f(static_cast<int>(i))]);
    const double v_opt = std::abs(u_opt);
    note(vband, std::max({bus.v_min - v_opt, v_opt - bus.v_max, 0.0}), fmt::format("bus {}", bus.id), tol);
    note(agree, std::abs(u_opt - std::polar(pf.vm[i], pf.va[i] + angle_ref)), fmt::format("bus {}", bus.id), tol);
  }

  double opt_losses = 0.0;
  for (int l = 0; l < L.n_line; ++l) opt_losses += x[L.p_from(l)] + x[L.p_to(l)];
  rep.optimizer_losses_mw = network.to_mw(opt_losses);
  note(agree, network.to_pu_power(std::abs(rep.optimizer_losses_mw - pf.losses_mw)), "losses", tol);
  note(agree, std::abs(x[L.p_gen(problem.ref_gen)] - network.to_pu_power(pf.slack_p_mw)), "interface P", tol);
  note(agree, std::abs(x[L.q_gen(problem.ref_gen)] - network.to_pu_power(pf.slack_q_mvar)), "interface Q", tol);
  return rep;
}

VerificationReport verify_point(const NetworkCase& network, const Configuration& config, const QcpProblem& problem,
                                const NlpSolution& solution, double tol) {
  return verify_point(network, config, problem, solution.x, tol);
}

}  // namespace pqflex
