#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pqflex/config.hpp"
#include "pqflex/network.hpp"
#include "pqflex/nlp.hpp"

namespace pqflex {

class QcpProblem;
struct NlpSolution;

/// Net injection (generation - demand + flex) at one bus, p.u.
struct BusInjection {
  double p = 0.0;
  double q = 0.0;
};

struct LineFlowResult {
  std::size_t line = 0;  // case line index
  double p_from = 0.0;   // MW
  double q_from = 0.0;   // MVAr
  double p_to = 0.0;
  double q_to = 0.0;
};

struct PowerFlowResult {
  bool converged = false;
  int iterations = 0;
  std::vector<double> vm;  // p.u., case bus order
  std::vector<double> va;  // rad
  std::vector<LineFlowResult> flows;
  double losses_mw = 0.0;
  double slack_p_mw = 0.0;  // injection at the reference bus
  double slack_q_mvar = 0.0;
  double mismatch = 0.0;  // p.u., max-norm
};

struct PowerFlowOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double v_ref = 1.0;
};

/// Injections with every flexible unit idle and controllable generators at
/// zero (clamped into their bounds).
std::vector<BusInjection> base_injections(const NetworkCase& network);

/**
 * Newton-Raphson power flow in polar coordinates from a flat start. The
 * reference bus is the slack at |V| = options.v_ref, angle 0; every other bus
 * is PQ with the given injection.
 */
PowerFlowResult ac_power_flow(const NetworkCase& network, const Configuration& config,
                              const std::vector<BusInjection>& injections, const PowerFlowOptions& options = {});

/// Backward-forward sweep; radial configurations only (throws otherwise).
PowerFlowResult backward_forward_sweep(const NetworkCase& network, const Configuration& config,
                                       const std::vector<BusInjection>& injections,
                                       const PowerFlowOptions& options = {});

struct CheckResult {
  std::string family;  // power_flow, voltage_band, thermal, flex_bounds, generator_bounds, pinning, agreement
  bool passed = true;
  double worst = 0.0;  // largest violation found
  std::vector<std::string> offenders;
};

struct VerificationReport {
  std::vector<CheckResult> checks;
  PowerFlowResult flow;
  double oracle_losses_mw = 0.0;
  double optimizer_losses_mw = 0.0;

  bool passed() const;
  const CheckResult* find(const std::string& family) const;
};

/// Controllable quantities of one operating point, in physical units.
struct Setpoints {
  double v_ref = 1.0;                       // p.u. at the reference bus
  std::vector<double> gen_p_mw;             // case generator order; reference entries unused
  std::vector<double> gen_q_mvar;
  std::vector<std::array<double, 4>> units; // p_up, p_dn, q_up, q_dn per flexible unit
};

/// Interface values the operating point is supposed to hit.
struct InterfacePin {
  std::optional<double> p_mw;
  std::optional<double> q_mvar;
};

Setpoints setpoints_from_point(const NetworkCase& network, const QcpProblem& problem, const Vector& x);
std::vector<BusInjection> injections_from_setpoints(const NetworkCase& network, const Setpoints& sp);

/**
 * Re-derives the operating state from setpoints alone with ac_power_flow and
 * checks voltage band, thermal limits, unit and generator bounds and the
 * interface pin at tolerance `tol` (p.u.).
 */
VerificationReport verify_setpoints(const NetworkCase& network, const Configuration& config, const Setpoints& sp,
                                    const InterfacePin& pin = {}, double tol = 1e-5);

/// Net bus injections implied by an optimizer point.
std::vector<BusInjection> injections_from_point(const NetworkCase& network, const QcpProblem& problem, const Vector& x);

/**
 * verify_setpoints on the setpoints of `x`, plus the optimizer's own voltage
 * magnitudes against the band and its agreement with the oracle state
 * (voltages, losses, interface P/Q).
 */
VerificationReport verify_point(const NetworkCase& network, const Configuration& config, const QcpProblem& problem,
                                const Vector& x, double tol = 1e-5);
VerificationReport verify_point(const NetworkCase& network, const Configuration& config, const QcpProblem& problem,
                                const NlpSolution& solution, double tol = 1e-5);

}  // namespace pqflex
