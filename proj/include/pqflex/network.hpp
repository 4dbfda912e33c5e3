#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pqflex {

/// Bus of the distribution network. Demand is stored in p.u. of the case base.
/// Uncontrollable generation is carried as negative demand.
struct Bus {
  int id = 0;
  double v_min = 0.0;
  double v_max = 0.0;
  double p_d = 0.0;
  double q_d = 0.0;
};

/// Series branch. r, x and s_max are per unit.
struct Line {
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;
  double x = 0.0;
  double s_max = 0.0;
  bool switchable = false;
  bool normal_status = true;

  std::string name() const;
};

struct Generator {
  int bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  bool is_reference = false;
};

/// Flexible unit with independent up/down regulation capacities (p.u.) and
/// linear activation prices in $/MWh and $/MVArh.
struct FlexUnit {
  std::string label;
  int bus = 0;
  double p_up_max = 0.0;
  double p_dn_max = 0.0;
  double q_up_max = 0.0;
  double q_dn_max = 0.0;
  double cost_p = 0.0;
  double cost_q = 0.0;
};

/// Optional solver overrides carried by the [settings] section of a case file.
struct CaseSettings {
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<int> multistart;
};

enum class ImpedanceUnit { PerUnit, Ohm };

/// Immutable problem instance. All electrical quantities are per unit on
/// s_base; voltages in p.u. of v_base.
class NetworkCase {
 public:
  std::string name;
  double s_base = 1.0;  // MVA
  double v_base = 1.0;  // kV
  int ref_bus = 0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<FlexUnit> flex_units;
  CaseSettings settings;

  /// Position of a bus id in `buses`. Throws std::out_of_range for unknown ids.
  std::size_t bus_index(int id) const;
  bool has_bus(int id) const { return index_.count(id) != 0; }
  std::size_t ref_index() const { return bus_index(ref_bus); }
  /// Index of the generator flagged is_reference.
  std::size_t reference_generator() const;

  double to_pu_power(double mw) const { return mw / s_base; }
  double to_mw(double pu) const { return pu * s_base; }
  double impedance_base_ohm() const { return v_base * v_base / s_base; }

  /// Rebuilds the id lookup; call after mutating `buses`.
  void reindex();

 private:
  std::unordered_map<int, std::size_t> index_;
};

/// Thrown by parse_case. `line` and `column` are 1-based; 0 when not
/// applicable (semantic errors).
class CaseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, Semantic };
  CaseError(Kind kind, std::string message, int line = 0, int column = 0);
  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  Kind kind_;
  int line_;
  int column_;
};

/// Parses the sectioned case-file format. Powers are given in MW/MVAr and
/// converted to p.u.; impedances in ohm or p.u. per the [meta] impedance_unit
/// key. Semantic invariants needed to build a usable instance (resolvable bus
/// ids, unique ids, single reference generator, nonzero impedance) are
/// enforced here; the remaining checks live in validate_case.
NetworkCase parse_case(std::string_view text);
NetworkCase load_case(const std::string& path);

/// Writes `network` in the case-file format with p.u. impedances and
/// 17-significant-digit numbers.
std::string serialize_case(const NetworkCase& network);

struct Admittance {
  double g = 0.0;
  double b = 0.0;
};

/// Series admittance 1/(r + jx).
Admittance line_admittance(const Line& line);

struct Diagnostic {
  std::string code;     // e.g. "voltage bounds inverted"
  std::string element;  // e.g. "bus 12"
  std::string message;
};

/// Checks every type invariant plus connectivity of the normal topology.
std::vector<Diagnostic> validate_case(const NetworkCase& network);

}  // namespace pqflex
