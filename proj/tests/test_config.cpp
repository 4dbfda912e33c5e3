#include <doctest.h>

#include <set>

#include "pqflex/config.hpp"
#include "support.hpp"

using namespace pqflex;

namespace {

std::size_t line_index(const NetworkCase& n, int a, int b) {
  for (std::size_t k = 0; k < n.lines.size(); ++k)
    if ((n.lines[k].from_bus == a && n.lines[k].to_bus == b) || (n.lines[k].from_bus == b && n.lines[k].to_bus == a))
      return k;
  throw std::out_of_range("no such line");
}

}  // namespace

TEST_CASE("bundled case has four connected configurations") {
  const NetworkCase n = pqtest::bundled();
  const auto configs = enumerate_configurations(n);
  REQUIRE(configs.size() == 4);
  const std::size_t s81 = line_index(n, 8, 1), s87 = line_index(n, 8, 7), nop = line_index(n, 18, 33);

  std::set<std::string> labels;
  for (const auto& c : configs) {
    labels.insert(c.label);
    CHECK(is_connected(n, c));
    CHECK(c.statuses.size() == 3);
    const auto lines = effective_topology(n, c);
    CHECK((c.topology == Topology::Radial) == (lines.size() == n.buses.size() - 1));
  }
  CHECK(labels == std::set<std::string>{"NOP-open", "NOP-closed", "feeder-1-only", "feeder-2-only"});

  const auto& normal = configs.front();
  CHECK(normal.label == "NOP-open");
  CHECK(normal.statuses.at(s81));
  CHECK(normal.statuses.at(s87));
  CHECK_FALSE(normal.statuses.at(nop));

  const auto& closed = find_configuration(configs, "NOP-closed");
  CHECK(closed.topology == Topology::Meshed);
  CHECK(closed.statuses.at(nop));

  const auto& f1 = find_configuration(configs, "feeder-1-only");
  CHECK_FALSE(f1.statuses.at(s81));
  CHECK(f1.statuses.at(nop));
  CHECK(f1.statuses.at(s87));
  const auto& f2 = find_configuration(configs, "feeder-2-only");
  CHECK_FALSE(f2.statuses.at(s87));
  CHECK(f2.statuses.at(nop));
  CHECK(f2.statuses.at(s81));

  CHECK_THROWS_AS(find_configuration(configs, "nope"), std::invalid_argument);
}

TEST_CASE("enumeration is deterministic") {
  const NetworkCase n = pqtest::bundled();
  const auto a = enumerate_configurations(n), b = enumerate_configurations(n);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].label == b[k].label);
    CHECK(a[k].statuses == b[k].statuses);
  }
}

TEST_CASE("is_connected on the bundled case") {
  const NetworkCase n = pqtest::bundled();
  std::map<std::size_t, bool> all_on;
  for (std::size_t k = 0; k < n.lines.size(); ++k)
    if (n.lines[k].switchable) all_on[k] = true;
  CHECK(is_connected(n, make_configuration(n, all_on)));

  std::map<std::size_t, bool> cut = all_on;
  cut[line_index(n, 18, 33)] = false;
  cut[line_index(n, 8, 1)] = false;
  CHECK_FALSE(is_connected(n, make_configuration(n, cut)));
}

TEST_CASE("effective topology line counts") {
  const NetworkCase n = pqtest::bundled();
  const auto configs = enumerate_configurations(n);
  CHECK(effective_topology(n, find_configuration(configs, "NOP-open")).size() == 37);
  CHECK(effective_topology(n, find_configuration(configs, "NOP-closed")).size() == 38);

  const NetworkCase two = parse_case(pqtest::two_bus_text(0.01, 0.03, 1, 0.5, {{}}));
  const auto lines = effective_topology(two, normal_configuration(two));
  CHECK(lines == std::vector<std::size_t>{0});
}

TEST_CASE("cases without switches or with a critical switch") {
  NetworkCase two = parse_case(pqtest::two_bus_text(0.01, 0.03, 1, 0.5, {{}}));
  auto configs = enumerate_configurations(two);
  REQUIRE(configs.size() == 1);
  CHECK(configs[0].statuses.empty());

  two.lines[0].switchable = true;
  configs = enumerate_configurations(two);
  REQUIRE(configs.size() == 1);
  CHECK(configs[0].statuses.at(0));
  CHECK_FALSE(is_connected(two, make_configuration(two, {{0, false}})));
}

TEST_CASE("enumeration refuses too many switchable lines") {
  NetworkCase n = pqtest::bundled();
  for (auto& l : n.lines) l.switchable = true;
  CHECK_THROWS_WITH_AS(enumerate_configurations(n), doctest::Contains("too many switchable lines"), EnumerationError);
}
