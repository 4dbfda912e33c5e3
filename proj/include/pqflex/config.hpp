#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqflex/network.hpp"

namespace pqflex {

enum class Topology { Radial, Meshed };

const char* to_string(Topology t);

/// On/off assignment of every switchable line (keyed by line index) with a
/// stable human-readable label.
struct Configuration {
  std::map<std::size_t, bool> statuses;
  std::string label;
  Topology topology = Topology::Radial;

  /// Whether line `index` is in service under this configuration. Lines that
  /// are not switchable keep their normal status.
  bool line_on(const NetworkCase& network, std::size_t index) const;
};

class EnumerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration with every switchable line at its normal status.
Configuration normal_configuration(const NetworkCase& network);

/// Every connected assignment over the switchable lines. The normal
/// configuration comes first; the rest are ordered by the number of switches
/// that differ from normal, ties broken lexicographically over line index
/// with "on" before "off". Throws EnumerationError above `max_switchable`.
std::vector<Configuration> enumerate_configurations(const NetworkCase& network, std::size_t max_switchable = 12);

/// True iff every bus is reachable from the reference bus over in-service lines.
bool is_connected(const NetworkCase& network, const Configuration& config);

/// Indices of the in-service lines; off lines are dropped entirely.
std::vector<std::size_t> effective_topology(const NetworkCase& network, const Configuration& config);

/// Fills `label` and `topology` for a hand-built status map.
Configuration make_configuration(const NetworkCase& network, std::map<std::size_t, bool> statuses);

/// Looks a configuration up by label; throws std::invalid_argument if absent.
const Configuration& find_configuration(const std::vector<Configuration>& configs, const std::string& label);

}  // namespace pqflex
