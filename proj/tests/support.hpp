#pragma once

#include <fmt/format.h>

#include <random>
#include <string>
#include <vector>

#include "pqflex/network.hpp"

namespace pqtest {

inline std::string data_file(const std::string& rel) { return std::string(PQFLEX_DATA_DIR) + "/" + rel; }

inline pqflex::NetworkCase bundled() { return pqflex::load_case(data_file("cases/synthetic38.case")); }

struct UnitSpec {
  std::string label = "A";
  int bus = 2;
  double p_up = 1, p_dn = 1, q_up = 1, q_dn = 1;
  double cost_p = 300, cost_q = 150;
};

/// Reference bus 1 plus load bus 2 on one line; impedances in p.u., powers in MW on a 1 MVA base.
inline std::string two_bus_text(double r, double x, double p_load, double q_load, const std::vector<UnitSpec>& units,
                                double s_max = 5.0, double v_lo = 0.94, double v_hi = 1.06) {
  std::string t = fmt::format(R"([meta]
name = two_bus
s_base_mva = 1
v_base_kv = 1
ref_bus = 1

[buses]
id, v_min, v_max, p_d_mw, q_d_mvar
1, 0.99, 1.01, 0, 0
2, {}, {}, {}, {}

[lines]
from, to, r, x, s_max_mva, switchable, normal_status
1, 2, {}, {}, {}, false, true

[generators]
bus, p_min, p_max, q_min, q_max, is_reference
1, -10, 10, -10, 10, true

[flex_units]
label, bus, p_up, p_dn, q_up, q_dn, cost_p, cost_q
)",
                              v_lo, v_hi, p_load, q_load, r, x, s_max);
  for (const auto& u : units)
    t += fmt::format("{}, {}, {}, {}, {}, {}, {}, {}\n", u.label, u.bus, u.p_up, u.p_dn, u.q_up, u.q_dn, u.cost_p,
                     u.cost_q);
  return t;
}

/// Random radial feeder with 2..6 buses and one flexible unit, in p.u. on a 1 MVA base.
inline std::string random_case_text(std::mt19937& rng, int n_bus) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::string t = fmt::format(
      "[meta]\nname = random{}\ns_base_mva = 1\nv_base_kv = 1\nref_bus = 1\n\n[buses]\nid, v_min, v_max, p_d_mw, "
      "q_d_mvar\n1, 0.99, 1.01, 0, 0\n",
      n_bus);
  for (int b = 2; b <= n_bus; ++b)
    t += fmt::format("{}, 0.9, 1.1, {:.4f}, {:.4f}\n", b, 0.05 + 0.25 * U(rng), 0.02 + 0.1 * U(rng));
  t += "\n[lines]\nfrom, to, r, x, s_max_mva, switchable, normal_status\n";
  for (int b = 2; b <= n_bus; ++b) {
    const int parent = 1 + static_cast<int>(U(rng) * (b - 1));
    t += fmt::format("{}, {}, {:.4f}, {:.4f}, {:.3f}, false, true\n", parent, b, 0.005 + 0.03 * U(rng),
                     0.01 + 0.05 * U(rng), 1.2 + 1.0 * U(rng));
  }
  t += "\n[generators]\nbus, p_min, p_max, q_min, q_max, is_reference\n1, -10, 10, -10, 10, true\n";
  const int unit_bus = 2 + static_cast<int>(U(rng) * (n_bus - 1));
  t += fmt::format(
      "\n[flex_units]\nlabel, bus, p_up, p_dn, q_up, q_dn, cost_p, cost_q\nU, {}, {:.3f}, {:.3f}, {:.3f}, {:.3f}, "
      "{:.1f}, {:.1f}\n",
      unit_bus, 0.05 + 0.15 * U(rng), 0.05 + 0.15 * U(rng), 0.05 + 0.15 * U(rng), 0.05 + 0.15 * U(rng),
      100 + 300 * U(rng), 50 + 150 * U(rng));
  return t;
}

}  // namespace pqtest
