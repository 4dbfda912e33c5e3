#include "pqflex/config.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace pqflex {

const char* to_string(Topology t) { return t == Topology::Radial ? "radial" : "meshed"; }

bool Configuration::line_on(const NetworkCase& network, std::size_t index) const {
  const Line& line = network.lines.at(index);
  if (!line.switchable) return line.normal_status;
  auto it = statuses.find(index);
  return it != statuses.end() ? it->second : line.normal_status;
}

namespace {

std::vector<std::size_t> switchable_lines(const NetworkCase& network) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < network.lines.size(); ++k)
    if (network.lines[k].switchable) out.push_back(k);
  return out;
}

std::string label_for(const NetworkCase& network, const std::map<std::size_t, bool>& statuses) {
  if (statuses.empty()) return "normal";
  std::vector<std::size_t> ties, sectionalizers;
  for (const auto& [k, on] : statuses) (network.lines[k].normal_status ? sectionalizers : ties).push_back(k);

  bool is_normal = true;
  for (const auto& [k, on] : statuses) is_normal = is_normal && on == network.lines[k].normal_status;
  if (is_normal) return ties.empty() ? "normal" : "NOP-open";

  const bool ties_closed = !ties.empty() && std::all_of(ties.begin(), ties.end(), [&](auto k) { return statuses.at(k); });
  std::vector<std::size_t> open_sections;
  for (auto k : sectionalizers)
    if (!statuses.at(k)) open_sections.push_back(k);
  if (ties_closed && open_sections.empty()) return "NOP-closed";
  if (ties_closed && sectionalizers.size() == 2 && open_sections.size() == 1) {
    // Supply comes through the remaining closed sectionalizer.
    const std::size_t feeder = sectionalizers[0] == open_sections[0] ? 2 : 1;
    return fmt::format("feeder-{}-only", feeder);
  }
  std::string label = "open";
  char sep = ':';
  for (const auto& [k, on] : statuses) {
    if (on) continue;
    label += sep + network.lines[k].name();
    sep = '+';
  }
  return label == "open" ? "all-closed" : label;
}

}  // namespace

Configuration make_configuration(const NetworkCase& network, std::map<std::size_t, bool> statuses) {
  Configuration c;
  c.statuses = std::move(statuses);
  for (std::size_t k : switchable_lines(network)) c.statuses.try_emplace(k, network.lines[k].normal_status);
  c.label = label_for(network, c.statuses);
  std::size_t in_service = 0;
  for (std::size_t k = 0; k < network.lines.size(); ++k) in_service += c.line_on(network, k) ? 1 : 0;
  c.topology = in_service + 1 > network.buses.size() ? Topology::Meshed : Topology::Radial;
  return c;
}

Configuration normal_configuration(const NetworkCase& network) { return make_configuration(network, {}); }

bool is_connected(const NetworkCase& network, const Configuration& config) {
  const std::size_t nb = network.buses.size();
  std::vector<std::vector<std::size_t>> adj(nb);
  for (std::size_t k = 0; k < network.lines.size(); ++k) {
    if (!config.line_on(network, k)) continue;
    const auto a = network.bus_index(network.lines[k].from_bus);
    const auto b = network.bus_index(network.lines[k].to_bus);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(nb, false);
  std::vector<std::size_t> stack{network.ref_index()};
  seen[stack.front()] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    auto b = stack.back();
    stack.pop_back();
    for (auto nbr : adj[b]) {
      if (seen[nbr]) continue;
      seen[nbr] = true;
      ++count;
      stack.push_back(nbr);
    }
  }
  return count == nb;
}

std::vector<Configuration> enumerate_configurations(const NetworkCase& network, std::size_t max_switchable) {
  const auto switches = switchable_lines(network);
  if (switches.size() > max_switchable)
    throw EnumerationError(fmt::format("too many switchable lines for enumeration ({} > {})", switches.size(),
                                       max_switchable));
  struct Candidate {
    std::size_t distance;
    std::vector<bool> off;  // per switch, line-index order
    Configuration config;
  };
  std::vector<Candidate> found;
  const std::size_t total = std::size_t{1} << switches.size();
  for (std::size_t mask = 0; mask < total; ++mask) {
    std::map<std::size_t, bool> statuses;
    std::vector<bool> off(switches.size());
    std::size_t distance = 0;
    for (std::size_t s = 0; s < switches.size(); ++s) {
      const bool on = (mask >> s) & 1U;
      statuses[switches[s]] = on;
      off[s] = !on;
      distance += on != network.lines[switches[s]].normal_status ? 1 : 0;
    }
    Configuration c = make_configuration(network, std::move(statuses));
    if (!is_connected(network, c)) continue;
    found.push_back(Candidate{distance, std::move(off), std::move(c)});
  }
  std::sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.off < b.off;
  });
  std::vector<Configuration> out;
  out.reserve(found.size());
  for (auto& c : found) out.push_back(std::move(c.config));
  return out;
}

std::vector<std::size_t> effective_topology(const NetworkCase& network, const Configuration& config) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < network.lines.size(); ++k)
    if (config.line_on(network, k)) out.push_back(k);
  return out;
}

const Configuration& find_configuration(const std::vector<Configuration>& configs, const std::string& label) {
  for (const auto& c : configs)
    if (c.label == label) return c;
  throw std::invalid_argument(fmt::format("unknown configuration '{}'", label));
}

}  // namespace pqflex
