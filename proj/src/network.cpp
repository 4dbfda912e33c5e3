#include "pqflex/network.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace pqflex {

std::string Line::name() const { return fmt::format("{}-{}", from_bus, to_bus); }

std::size_t NetworkCase::bus_index(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range(fmt::format("unknown bus {}", id));
  return it->second;
}

std::size_t NetworkCase::reference_generator() const {
  for (std::size_t g = 0; g < generators.size(); ++g)
    if (generators[g].is_reference) return g;
  throw std::logic_error("case has no reference generator");
}

void NetworkCase::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < buses.size(); ++i) index_.emplace(buses[i].id, i);
}

CaseError::CaseError(Kind kind, std::string message, int line, int column)
    : std::runtime_error(line > 0 ? fmt::format("{}:{}: {}", line, column, message)
                                  : std::move(message)),
      kind_(kind),
      line_(line),
      column_(column) {}

namespace {

struct Cell {
  std::string_view text;
  int column = 1;
};

struct Row {
  int line = 0;
  std::vector<Cell> cells;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Row> rows;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void syntax(int line, int column, const std::string& message) {
  throw CaseError(CaseError::Kind::Syntax, message, line, column);
}

[[noreturn]] void semantic(const std::string& message) {
  throw CaseError(CaseError::Kind::Semantic, message);
}

// Splits `text` into sections; each non-empty, non-comment line becomes a Row
// of comma-separated cells ("key = value" lines in [meta]/[settings] become a
// two-cell row).
std::vector<Section> tokenize(std::string_view text) {
  std::vector<Section> sections;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string_view line = trim(raw);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const int indent = static_cast<int>(line.data() - raw.data());
    if (line.front() == '[') {
      if (line.back() != ']') syntax(line_no, indent + 1, "unterminated section header");
      std::string name(trim(line.substr(1, line.size() - 2)));
      if (name.empty()) syntax(line_no, indent + 1, "empty section name");
      sections.push_back(Section{name, line_no, {}});
      continue;
    }
    if (sections.empty()) syntax(line_no, indent + 1, "content before first section header");
    Row row{line_no, {}};
    const bool keyed = sections.back().name == "meta" || sections.back().name == "settings";
    const char sep = keyed ? '=' : ',';
    std::size_t start = 0;
    while (true) {
      std::size_t cut = line.find(sep, start);
      std::string_view piece = line.substr(start, cut == std::string_view::npos ? line.size() - start : cut - start);
      std::string_view cell = trim(piece);
      const int column = indent + 1 + static_cast<int>(start + (cell.data() - piece.data()));
      if (cell.empty()) syntax(line_no, column, "empty field");
      row.cells.push_back(Cell{cell, column});
      if (cut == std::string_view::npos) break;
      start = cut + 1;
      if (keyed) {
        std::string_view rest = trim(line.substr(start));
        const int col = indent + 1 + static_cast<int>(rest.data() - line.data());
        if (rest.empty()) syntax(line_no, col, "missing value");
        row.cells.push_back(Cell{rest, col});
        break;
      }
    }
    if (keyed && row.cells.size() != 2) syntax(line_no, indent + 1, "expected 'key = value'");
    sections.back().rows.push_back(std::move(row));
  }
  return sections;
}

double parse_number(const Cell& cell, int line) {
  double value = 0.0;
  const char* first = cell.text.data();
  const char* last = first + cell.text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
  if (ec != std::errc() || ptr != last || !std::isfinite(value))
    syntax(line, cell.column, fmt::format("invalid number '{}'", cell.text));
  return value;
}

int parse_int(const Cell& cell, int line) {
  int value = 0;
  const char* first = cell.text.data();
  const char* last = first + cell.text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) syntax(line, cell.column, fmt::format("invalid integer '{}'", cell.text));
  return value;
}

bool parse_bool(const Cell& cell, int line) {
  if (cell.text == "true" || cell.text == "on" || cell.text == "1") return true;
  if (cell.text == "false" || cell.text == "off" || cell.text == "0") return false;
  syntax(line, cell.column, fmt::format("invalid boolean '{}'", cell.text));
}

bool valid_label(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

// Maps the header row of a table section onto the normative column list.
class Table {
 public:
  Table(const Section& section, std::initializer_list<std::string_view> columns) : section_(section) {
    if (section.rows.empty()) syntax(section.line, 1, fmt::format("section [{}] has no header row", section.name));
    const Row& header = section.rows.front();
    for (const auto& cell : header.cells) {
      if (std::find(columns.begin(), columns.end(), cell.text) == columns.end())
        syntax(header.line, cell.column, fmt::format("unknown field '{}' in [{}]", cell.text, section.name));
      if (slot_.count(std::string(cell.text)))
        syntax(header.line, cell.column, fmt::format("duplicate field '{}'", cell.text));
      slot_.emplace(std::string(cell.text), slot_.size());
    }
    for (auto c : columns)
      if (!slot_.count(std::string(c)))
        syntax(header.line, 1, fmt::format("missing field '{}' in [{}]", c, section.name));
    for (std::size_t r = 1; r < section.rows.size(); ++r) {
      const Row& row = section.rows[r];
      if (row.cells.size() != slot_.size())
        syntax(row.line, row.cells.empty() ? 1 : row.cells.back().column,
               fmt::format("expected {} fields, found {}", slot_.size(), row.cells.size()));
    }
  }

  std::size_t size() const { return section_.rows.size() - 1; }
  int line(std::size_t r) const { return section_.rows[r + 1].line; }
  const Cell& cell(std::size_t r, std::string_view column) const {
    return section_.rows[r + 1].cells[slot_.at(std::string(column))];
  }
  double number(std::size_t r, std::string_view c) const { return parse_number(cell(r, c), line(r)); }
  int integer(std::size_t r, std::string_view c) const { return parse_int(cell(r, c), line(r)); }
  bool boolean(std::size_t r, std::string_view c) const { return parse_bool(cell(r, c), line(r)); }

 private:
  const Section& section_;
  std::map<std::string, std::size_t> slot_;
};

}  // namespace

NetworkCase parse_case(std::string_view text) {
  const auto sections = tokenize(text);
  std::map<std::string, const Section*> by_name;
  for (const auto& s : sections) {
    static const std::set<std::string> known{"meta", "buses", "lines", "generators", "flex_units", "settings"};
    if (!known.count(s.name)) syntax(s.line, 1, fmt::format("unknown section [{}]", s.name));
    if (!by_name.emplace(s.name, &s).second) syntax(s.line, 1, fmt::format("duplicate section [{}]", s.name));
  }
  for (auto required : {"meta", "buses", "lines", "generators"})
    if (!by_name.count(required)) semantic(fmt::format("missing section [{}]", required));

  NetworkCase network;
  ImpedanceUnit z_unit = ImpedanceUnit::PerUnit;
  bool have_s = false, have_v = false, have_ref = false;
  for (const auto& row : by_name["meta"]->rows) {
    const auto key = row.cells[0].text;
    const Cell& value = row.cells[1];
    if (key == "name") {
      network.name = std::string(value.text);
    } else if (key == "s_base_mva") {
      network.s_base = parse_number(value, row.line);
      have_s = true;
    } else if (key == "v_base_kv") {
      network.v_base = parse_number(value, row.line);
      have_v = true;
    } else if (key == "ref_bus") {
      network.ref_bus = parse_int(value, row.line);
      have_ref = true;
    } else if (key == "impedance_unit") {
      if (value.text == "ohm") {
        z_unit = ImpedanceUnit::Ohm;
      } else if (value.text == "pu") {
        z_unit = ImpedanceUnit::PerUnit;
      } else {
        syntax(row.line, value.column, fmt::format("impedance_unit must be 'ohm' or 'pu', got '{}'", value.text));
      }
    } else {
      syntax(row.line, row.cells[0].column, fmt::format("unknown field '{}' in [meta]", key));
    }
  }
  if (!have_s || !have_v || !have_ref) semantic("[meta] requires s_base_mva, v_base_kv and ref_bus");
  if (!(network.s_base > 0.0) || !(network.v_base > 0.0)) semantic("s_base_mva and v_base_kv must be positive");

  {
    Table t(*by_name["buses"], {"id", "v_min", "v_max", "p_d_mw", "q_d_mvar"});
    std::set<int> seen;
    for (std::size_t r = 0; r < t.size(); ++r) {
      Bus bus;
      bus.id = t.integer(r, "id");
      if (!seen.insert(bus.id).second) semantic(fmt::format("duplicate bus id {} (line {})", bus.id, t.line(r)));
      bus.v_min = t.number(r, "v_min");
      bus.v_max = t.number(r, "v_max");
      bus.p_d = network.to_pu_power(t.number(r, "p_d_mw"));
      bus.q_d = network.to_pu_power(t.number(r, "q_d_mvar"));
      network.buses.push_back(bus);
    }
  }
  network.reindex();
  auto require_bus = [&](int id, std::string_view what, int line) {
    if (!network.has_bus(id)) semantic(fmt::format("{} references nonexistent bus {} (line {})", what, id, line));
  };
  require_bus(network.ref_bus, "[meta] ref_bus", by_name["meta"]->line);

  {
    Table t(*by_name["lines"], {"from", "to", "r", "x", "s_max_mva", "switchable", "normal_status"});
    const double z_scale = z_unit == ImpedanceUnit::Ohm ? 1.0 / network.impedance_base_ohm() : 1.0;
    for (std::size_t r = 0; r < t.size(); ++r) {
      Line line;
      line.from_bus = t.integer(r, "from");
      line.to_bus = t.integer(r, "to");
      require_bus(line.from_bus, "line", t.line(r));
      require_bus(line.to_bus, "line", t.line(r));
      line.r = t.number(r, "r") * z_scale;
      line.x = t.number(r, "x") * z_scale;
      if (std::abs(line.r) + std::abs(line.x) == 0.0)
        semantic(fmt::format("line {} has zero impedance (line {})", line.name(), t.line(r)));
      line.s_max = network.to_pu_power(t.number(r, "s_max_mva"));
      line.switchable = t.boolean(r, "switchable");
      line.normal_status = t.boolean(r, "normal_status");
      network.lines.push_back(line);
    }
  }
  {
    Table t(*by_name["generators"], {"bus", "p_min", "p_max", "q_min", "q_max", "is_reference"});
    for (std::size_t r = 0; r < t.size(); ++r) {
      Generator g;
      g.bus = t.integer(r, "bus");
      require_bus(g.bus, "generator", t.line(r));
      g.p_min = network.to_pu_power(t.number(r, "p_min"));
      g.p_max = network.to_pu_power(t.number(r, "p_max"));
      g.q_min = network.to_pu_power(t.number(r, "q_min"));
      g.q_max = network.to_pu_power(t.number(r, "q_max"));
      g.is_reference = t.boolean(r, "is_reference");
      network.generators.push_back(g);
    }
    const auto refs = std::count_if(network.generators.begin(), network.generators.end(),
                                    [](const Generator& g) { return g.is_reference; });
    if (refs == 0) semantic("missing reference generator");
    if (refs > 1) semantic("more than one reference generator");
    if (network.generators[network.reference_generator()].bus != network.ref_bus)
      semantic(fmt::format("reference generator is not at ref_bus {}", network.ref_bus));
  }
  if (by_name.count("flex_units")) {
    Table t(*by_name["flex_units"], {"label", "bus", "p_up", "p_dn", "q_up", "q_dn", "cost_p", "cost_q"});
    std::set<std::string> labels;
    for (std::size_t r = 0; r < t.size(); ++r) {
      FlexUnit u;
      const Cell& label = t.cell(r, "label");
      if (!valid_label(label.text)) syntax(t.line(r), label.column, fmt::format("invalid label '{}'", label.text));
      u.label = std::string(label.text);
      if (!labels.insert(u.label).second) semantic(fmt::format("duplicate flex unit label '{}'", u.label));
      u.bus = t.integer(r, "bus");
      require_bus(u.bus, fmt::format("flex unit {}", u.label), t.line(r));
      u.p_up_max = network.to_pu_power(t.number(r, "p_up"));
      u.p_dn_max = network.to_pu_power(t.number(r, "p_dn"));
      u.q_up_max = network.to_pu_power(t.number(r, "q_up"));
      u.q_dn_max = network.to_pu_power(t.number(r, "q_dn"));
      u.cost_p = t.number(r, "cost_p");
      u.cost_q = t.number(r, "cost_q");
      network.flex_units.push_back(u);
    }
  }
  if (by_name.count("settings")) {
    for (const auto& row : by_name["settings"]->rows) {
      const auto key = row.cells[0].text;
      const Cell& value = row.cells[1];
      if (key == "tol") {
        network.settings.tol = parse_number(value, row.line);
      } else if (key == "max_iter") {
        network.settings.max_iter = parse_int(value, row.line);
      } else if (key == "multistart") {
        network.settings.multistart = parse_int(value, row.line);
      } else {
        syntax(row.line, row.cells[0].column, fmt::format("unknown field '{}' in [settings]", key));
      }
    }
  }
  return network;
}

NetworkCase load_case(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("{}: file not found", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_case(buffer.str());
}

std::string serialize_case(const NetworkCase& n) {
  std::string out;
  auto num = [](double v) { return fmt::format("{:.17g}", v); };
  auto boolean = [](bool b) { return b ? "true" : "false"; };
  out += "[meta]\n";
  if (!n.name.empty()) out += fmt::format("name = {}\n", n.name);
  out += fmt::format("s_base_mva = {}\nv_base_kv = {}\nref_bus = {}\nimpedance_unit = pu\n\n", num(n.s_base),
                     num(n.v_base), n.ref_bus);
  out += "[buses]\nid, v_min, v_max, p_d_mw, q_d_mvar\n";
  for (const auto& b : n.buses)
    out += fmt::format("{}, {}, {}, {}, {}\n", b.id, num(b.v_min), num(b.v_max), num(n.to_mw(b.p_d)),
                       num(n.to_mw(b.q_d)));
  out += "\n[lines]\nfrom, to, r, x, s_max_mva, switchable, normal_status\n";
  for (const auto& l : n.lines)
    out += fmt::format("{}, {}, {}, {}, {}, {}, {}\n", l.from_bus, l.to_bus, num(l.r), num(l.x), num(n.to_mw(l.s_max)),
                       boolean(l.switchable), boolean(l.normal_status));
  out += "\n[generators]\nbus, p_min, p_max, q_min, q_max, is_reference\n";
  for (const auto& g : n.generators)
    out += fmt::format("{}, {}, {}, {}, {}, {}\n", g.bus, num(n.to_mw(g.p_min)), num(n.to_mw(g.p_max)),
                       num(n.to_mw(g.q_min)), num(n.to_mw(g.q_max)), boolean(g.is_reference));
  if (!n.flex_units.empty()) {
    out += "\n[flex_units]\nlabel, bus, p_up, p_dn, q_up, q_dn, cost_p, cost_q\n";
    for (const auto& u : n.flex_units)
      out += fmt::format("{}, {}, {}, {}, {}, {}, {}, {}\n", u.label, u.bus, num(n.to_mw(u.p_up_max)),
                         num(n.to_mw(u.p_dn_max)), num(n.to_mw(u.q_up_max)), num(n.to_mw(u.q_dn_max)), num(u.cost_p),
                         num(u.cost_q));
  }
  if (n.settings.tol || n.settings.max_iter || n.settings.multistart) {
    out += "\n[settings]\n";
    if (n.settings.tol) out += fmt::format("tol = {}\n", num(*n.settings.tol));
    if (n.settings.max_iter) out += fmt::format("max_iter = {}\n", *n.settings.max_iter);
    if (n.settings.multistart) out += fmt::format("multistart = {}\n", *n.settings.multistart);
  }
  return out;
}

Admittance line_admittance(const Line& line) {
  const double den = line.r * line.r + line.x * line.x;
  return {line.r / den, -line.x / den};
}

std::vector<Diagnostic> validate_case(const NetworkCase& n) {
  std::vector<Diagnostic> out;
  auto add = [&](std::string code, std::string element, std::string message = {}) {
    out.push_back(Diagnostic{std::move(code), std::move(element), std::move(message)});
  };
  std::set<int> ids;
  for (const auto& b : n.buses) {
    const auto el = fmt::format("bus {}", b.id);
    if (!ids.insert(b.id).second) add("duplicate bus id", el);
    if (!(b.v_min > 0.0)) add("voltage lower bound not positive", el);
    if (!(b.v_min < b.v_max)) add("voltage bounds inverted", el, fmt::format("v_min {} >= v_max {}", b.v_min, b.v_max));
    if (!std::isfinite(b.p_d) || !std::isfinite(b.q_d)) add("demand not finite", el);
  }
  auto known = [&](int id) { return ids.count(id) != 0; };
  if (!known(n.ref_bus)) add("dangling bus reference", "meta ref_bus", fmt::format("bus {}", n.ref_bus));

  std::set<std::pair<int, int>> pairs;
  for (std::size_t k = 0; k < n.lines.size(); ++k) {
    const auto& l = n.lines[k];
    const auto el = fmt::format("line {}", l.name());
    if (!known(l.from_bus) || !known(l.to_bus)) add("dangling bus reference", el);
    if (l.from_bus == l.to_bus) add("line endpoints coincide", el);
    if (l.r < 0.0) add("negative resistance", el);
    if (!(std::abs(l.r) + std::abs(l.x) > 0.0)) add("zero impedance", el);
    if (!(l.s_max > 0.0)) add("rating not positive", el);
    if (!pairs.insert(std::minmax(l.from_bus, l.to_bus)).second) add("parallel lines", el);
  }
  int refs = 0;
  for (const auto& g : n.generators) {
    const auto el = fmt::format("generator at bus {}", g.bus);
    if (!known(g.bus)) add("dangling bus reference", el);
    if (!(g.p_min <= g.p_max)) add("active power bounds inverted", el);
    if (!(g.q_min <= g.q_max)) add("reactive power bounds inverted", el);
    if (g.is_reference) {
      ++refs;
      if (g.bus != n.ref_bus) add("reference generator not at ref_bus", el);
    }
  }
  if (refs != 1) add("reference generator count", "case", fmt::format("expected exactly 1, found {}", refs));
  for (const auto& u : n.flex_units) {
    const auto el = fmt::format("flex unit {}", u.label);
    if (!known(u.bus)) add("dangling bus reference", el, fmt::format("bus {}", u.bus));
    if (u.p_up_max < 0 || u.p_dn_max < 0 || u.q_up_max < 0 || u.q_dn_max < 0) add("negative capacity", el);
    if (u.cost_p < 0 || u.cost_q < 0) add("negative cost", el);
  }

  // Connectivity of the normal topology from the reference bus.
  if (known(n.ref_bus)) {
    std::map<int, std::vector<int>> adj;
    for (const auto& l : n.lines) {
      if (!l.normal_status) continue;
      adj[l.from_bus].push_back(l.to_bus);
      adj[l.to_bus].push_back(l.from_bus);
    }
    std::set<int> reached{n.ref_bus};
    std::vector<int> stack{n.ref_bus};
    while (!stack.empty()) {
      int b = stack.back();
      stack.pop_back();
      for (int nb : adj[b])
        if (reached.insert(nb).second) stack.push_back(nb);
    }
    for (const auto& b : n.buses)
      if (!reached.count(b.id))
        add("normal topology disconnected", fmt::format("bus {}", b.id), "not reachable from ref_bus");
  }
  return out;
}

}  // namespace pqflex
