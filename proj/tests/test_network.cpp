#include <doctest.h>

#include <random>

#include "pqflex/network.hpp"
#include "support.hpp"

using namespace pqflex;

namespace {

bool has_diag(const std::vector<Diagnostic>& d, const std::string& code, const std::string& element = "") {
  for (const auto& x : d)
    if (x.code == code && (element.empty() || x.element == element)) return true;
  return false;
}

}  // namespace

TEST_CASE("line_admittance examples") {
  auto y = line_admittance(Line{1, 2, 0.0, 0.5, 1.0});
  CHECK(y.g == doctest::Approx(0.0));
  CHECK(y.b == doctest::Approx(-2.0));
  y = line_admittance(Line{1, 2, 0.05, 0.15, 1.0});
  CHECK(y.g == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(y.b == doctest::Approx(-6.0).epsilon(1e-12));
  y = line_admittance(Line{1, 2, 1.0, 0.0, 1.0});
  CHECK(y.g == doctest::Approx(1.0));
  CHECK(y.b == doctest::Approx(0.0));
}

TEST_CASE("line_admittance identities hold for random lines") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    Line l{1, 2, U(rng), U(rng) - 1.0, 1.0};
    if (std::abs(l.r) + std::abs(l.x) < 1e-6) continue;
    const auto y = line_admittance(l);
    CHECK(y.g * l.r - y.b * l.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(y.g * l.x + y.b * l.r) < 1e-12);
  }
}

TEST_CASE("bundled case parses with the expected structure") {
  const NetworkCase n = pqtest::bundled();
  CHECK(n.buses.size() == 38);
  CHECK(n.flex_units.size() == 4);
  int switchable = 0, feeders = 0;
  for (const auto& l : n.lines) {
    switchable += l.switchable ? 1 : 0;
    feeders += (l.from_bus == n.ref_bus || l.to_bus == n.ref_bus) ? 1 : 0;
  }
  CHECK(switchable == 3);
  CHECK(feeders == 2);
  CHECK(n.s_base == 10.0);
  CHECK(validate_case(n).empty());
  const char* labels[] = {"A", "B", "C", "D"};
  const int buses[] = {24, 17, 12, 36};
  for (int u = 0; u < 4; ++u) {
    CHECK(n.flex_units[u].label == labels[u]);
    CHECK(n.flex_units[u].bus == buses[u]);
  }
}

TEST_CASE("minimal two-bus case") {
  const NetworkCase n = parse_case(pqtest::two_bus_text(0.01, 0.03, 1.0, 0.5, {{}}));
  CHECK(n.buses.size() == 2);
  CHECK(n.lines.size() == 1);
  CHECK(n.buses[1].p_d == doctest::Approx(1.0));
  CHECK(validate_case(n).empty());
}

TEST_CASE("flex unit at a nonexistent bus is a semantic error naming the bus") {
  pqtest::UnitSpec u;
  u.bus = 99;
  try {
    parse_case(pqtest::two_bus_text(0.01, 0.03, 1.0, 0.5, {u}));
    FAIL("expected CaseError");
  } catch (const CaseError& e) {
    CHECK(e.kind() == CaseError::Kind::Semantic);
    CHECK(std::string(e.what()).find("99") != std::string::npos);
  }
}

TEST_CASE("syntax errors carry a position") {
  std::string t = pqtest::two_bus_text(0.01, 0.03, 1.0, 0.5, {{}});
  t.replace(t.find("0.01, 0.03"), 4, "abc!");
  try {
    parse_case(t);
    FAIL("expected CaseError");
  } catch (const CaseError& e) {
    CHECK(e.kind() == CaseError::Kind::Syntax);
    CHECK(e.line() == 14);
    CHECK(e.column() > 0);
  }
}

TEST_CASE("unknown fields are rejected") {
  std::string t = pqtest::two_bus_text(0.01, 0.03, 1.0, 0.5, {{}});
  t.replace(t.find("p_d_mw"), 6, "p_load");
  CHECK_THROWS_AS(parse_case(t), CaseError);
  t = pqtest::two_bus_text(0.01, 0.03, 1.0, 0.5, {{}}) + "\n[extras]\nfoo, bar\n1, 2\n";
  CHECK_THROWS_AS(parse_case(t), CaseError);
}

TEST_CASE("missing reference generator and zero impedance are rejected") {
  std::string t = pqtest::two_bus_text(0.01, 0.03, 1.0, 0.5, {{}});
  t.replace(t.find("10, true"), 8, "10, false");
  CHECK_THROWS_WITH_AS(parse_case(t), doctest::Contains("reference generator"), CaseError);
  CHECK_THROWS_AS(parse_case(pqtest::two_bus_text(0.0, 0.0, 1.0, 0.5, {{}})), CaseError);
}

TEST_CASE("serialize then parse round-trips") {
  const NetworkCase a = pqtest::bundled();
  const NetworkCase b = parse_case(serialize_case(a));
  REQUIRE(a.buses.size() == b.buses.size());
  REQUIRE(a.lines.size() == b.lines.size());
  CHECK(a.s_base == b.s_base);
  CHECK(a.ref_bus == b.ref_bus);
  for (std::size_t i = 0; i < a.buses.size(); ++i) {
    CHECK(a.buses[i].id == b.buses[i].id);
    CHECK(a.buses[i].p_d == b.buses[i].p_d);
    CHECK(a.buses[i].q_d == b.buses[i].q_d);
    CHECK(a.buses[i].v_min == b.buses[i].v_min);
  }
  for (std::size_t k = 0; k < a.lines.size(); ++k) {
    CHECK(a.lines[k].r == b.lines[k].r);
    CHECK(a.lines[k].x == b.lines[k].x);
    CHECK(a.lines[k].s_max == b.lines[k].s_max);
    CHECK(a.lines[k].switchable == b.lines[k].switchable);
    CHECK(a.lines[k].normal_status == b.lines[k].normal_status);
  }
  for (std::size_t u = 0; u < a.flex_units.size(); ++u) {
    CHECK(a.flex_units[u].label == b.flex_units[u].label);
    CHECK(a.flex_units[u].p_up_max == b.flex_units[u].p_up_max);
    CHECK(a.flex_units[u].cost_q == b.flex_units[u].cost_q);
  }
  CHECK(serialize_case(a) == serialize_case(b));
}

TEST_CASE("per-unit conversion is self-inverse") {
  const NetworkCase n = pqtest::bundled();
  for (double mw : {0.0, 1e-6, 0.375, 3.14159, -42.0, 1e4})
    CHECK(std::abs(n.to_mw(n.to_pu_power(mw)) - mw) <= 1e-12 * std::max(1.0, std::abs(mw)));
}

TEST_CASE("validate_case diagnostics") {
  NetworkCase n = pqtest::bundled();
  n.buses[4].v_min = 1.1;
  n.buses[4].v_max = 0.9;
  auto d = validate_case(n);
  CHECK(has_diag(d, "voltage bounds inverted", fmt::format("bus {}", n.buses[4].id)));

  n = pqtest::bundled();
  for (auto& l : n.lines)
    if (l.from_bus == 37 && l.to_bus == 38) l.normal_status = false;
  d = validate_case(n);
  CHECK(has_diag(d, "normal topology disconnected", "bus 38"));
}
