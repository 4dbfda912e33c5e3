#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pqflex/config.hpp"
#include "pqflex/network.hpp"
#include "pqflex/nlp.hpp"

namespace pqflex {

struct BranchFlow {
  double p = 0.0;
  double q = 0.0;
};

/// Sending-end flow of a series branch in rectangular voltage coordinates.
BranchFlow branch_flow(double e_i, double f_i, double e_j, double f_j, double g, double b);

/// Interface operating point in MW / MVAr (import positive).
struct TargetPoint {
  double p_mw = 0.0;
  double q_mvar = 0.0;
};

struct ObjectiveSpec {
  enum class Kind { BoundaryDirection, MinCost };

  Kind kind = Kind::BoundaryDirection;
  double w_p = 0.0;
  double w_q = 0.0;
  /// Required for MinCost: the pinned interface point.
  std::optional<TargetPoint> target;
  /// Optional interface P pin for BoundaryDirection (perimeter sweeps).
  std::optional<double> pinned_p_mw;

  /// Minimises w_p * P + w_q * Q at the interface; weights are normalised to
  /// unit length. Throws std::invalid_argument for (0, 0).
  static ObjectiveSpec boundary(double w_p, double w_q, std::optional<double> pinned_p_mw = std::nullopt);
  static ObjectiveSpec min_cost(TargetPoint target);
};

/// Slot assignment for every decision variable of one configuration.
struct VariableLayout {
  int n_bus = 0;
  int n_line = 0;  // in-service lines
  int n_gen = 0;
  int n_flex = 0;
  std::vector<std::size_t> lines;  // case line index per in-service slot

  int e(int bus) const { return bus; }
  int f(int bus) const { return n_bus + bus; }
  int p_from(int l) const { return 2 * n_bus + 4 * l; }
  int q_from(int l) const { return 2 * n_bus + 4 * l + 1; }
  int p_to(int l) const { return 2 * n_bus + 4 * l + 2; }
  int q_to(int l) const { return 2 * n_bus + 4 * l + 3; }
  int p_gen(int g) const { return 2 * n_bus + 4 * n_line + 2 * g; }
  int q_gen(int g) const { return 2 * n_bus + 4 * n_line + 2 * g + 1; }
  int p_up(int u) const { return 2 * n_bus + 4 * n_line + 2 * n_gen + 4 * u; }
  int p_dn(int u) const { return p_up(u) + 1; }
  int q_up(int u) const { return p_up(u) + 2; }
  int q_dn(int u) const { return p_up(u) + 3; }
  int size() const { return 2 * n_bus + 4 * n_line + 2 * n_gen + 4 * n_flex; }
};

enum class LimitKind { Thermal, VoltageMin, VoltageMax };

/// Identifies one inequality row of the network model.
struct LimitTag {
  LimitKind kind = LimitKind::Thermal;
  std::string element;  // bus id or directed line "i-j"

  std::string str() const;  // "vmin:33", "vmax:18", "smax:7-14"
};

/**
 * Continuous ACROPF for one switch configuration.
 *
 * Equality rows: four flow definitions per in-service line, P and Q balance
 * per bus, the angle reference f_ref = 0, then the interface pins. Inequality
 * rows: both-end thermal limits per line followed by the lower and upper
 * voltage band per bus.
 */
class QcpProblem : public QuadraticModel {
 public:
  VariableLayout layout;
  ObjectiveSpec spec;
  std::string case_name;
  std::string config_label;
  double s_base = 1.0;
  int ref_gen = 0;
  std::vector<std::string> equality_names;
  std::vector<LimitTag> limit_tags;
  /// Linear flexibility prices in $/h per p.u. regulation.
  std::vector<std::pair<int, double>> cost_terms;

  double interface_p_mw(const Vector& x) const { return x[layout.p_gen(ref_gen)] * s_base; }
  double interface_q_mvar(const Vector& x) const { return x[layout.q_gen(ref_gen)] * s_base; }
  /// Inequality rows whose value at x is below `tol` (active limits).
  std::vector<std::string> binding_tags(const Vector& x, double tol = 1e-6) const;
  /// Total flexibility cost in $/h at x (independent of the objective kind).
  double flex_cost(const Vector& x) const;
};

/// Builds the QCP; off lines are absent. Throws std::invalid_argument for a
/// disconnected configuration or a MinCost spec without target.
QcpProblem build_problem(const NetworkCase& network, const Configuration& config, const ObjectiveSpec& spec);

struct Residuals {
  Vector equality;
  Vector inequality;  // >= 0 when satisfied
  double objective = 0.0;
};

struct Derivatives {
  Vector gradient;
  SparseMatrix equality_jacobian;
  SparseMatrix inequality_jacobian;
  SparseMatrix hessian;  // lower triangle of the Lagrangian Hessian
};

/// Throws std::invalid_argument for wrong length or non-finite entries.
Residuals eval_residuals(const QcpProblem& problem, const Vector& x);
Derivatives eval_derivatives(const QcpProblem& problem, const Vector& x, const Vector& y, const Vector& z);
/// Hessian with unit multipliers.
Derivatives eval_derivatives(const QcpProblem& problem, const Vector& x);

}  // namespace pqflex
