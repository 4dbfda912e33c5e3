#include "pqflex/report.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pqflex {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string file_stem(const std::string& label) {
  std::string out = label;
  for (char& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return out;
}

namespace {

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

double parse_number(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error(fmt::format("bad number '{}'", s));
  return v;
}

json point_json(const Point& p) { return json::array({p.p, p.q}); }

json polygon_json(const Polygon& poly) {
  json out = json::array();
  for (const auto& p : poly) out.push_back(point_json(p));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// setpoint records

std::vector<SetpointRecord> boundary_records(const NetworkCase& network, const Configuration& config,
                                             const FlexibilityBoundary& boundary) {
  std::vector<SetpointRecord> out;
  if (boundary.vertices.empty()) return out;
  const QcpProblem problem = build_problem(network, config, ObjectiveSpec::boundary(1.0, 0.0));
  for (const auto& v : boundary.vertices) {
    if (v.x.size() == 0) continue;
    SetpointRecord r;
    r.source = "boundary";
    r.config_label = boundary.config_label;
    r.index = v.index;
    r.point = v.point;
    r.pin.p_mw = v.spec.pinned_p_mw;
    r.setpoints = setpoints_from_point(network, problem, v.x);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SetpointRecord> surface_records(const NetworkCase& network, const Configuration& config,
                                            const CostSurface& surface) {
  std::vector<SetpointRecord> out;
  const QcpProblem problem = build_problem(network, config, ObjectiveSpec::boundary(1.0, 0.0));
  for (std::size_t k = 0; k < surface.points.size(); ++k) {
    const DispatchPoint& d = surface.points[k];
    if (!d.feasible || d.x.size() == 0) continue;
    SetpointRecord r;
    r.source = "surface";
    r.config_label = surface.config_label;
    r.index = static_cast<int>(k);
    r.point = {problem.interface_p_mw(d.x), problem.interface_q_mvar(d.x)};
    r.pin.p_mw = d.target.p_mw;
    r.pin.q_mvar = d.target.q_mvar;
    r.setpoints = setpoints_from_point(network, problem, d.x);
    out.push_back(std::move(r));
  }
  return out;
}

std::string setpoints_csv(const NetworkCase& network, const std::vector<SetpointRecord>& records) {
  std::vector<std::string> head = {"source", "config_label", "index", "P_MW", "Q_MVAr", "pin_P_MW", "pin_Q_MVAr",
                                   "v_ref"};
  for (const auto& g : network.generators) {
    head.push_back(fmt::format("gen{}_P_MW", g.bus));
    head.push_back(fmt::format("gen{}_Q_MVAr", g.bus));
  }
  for (const auto& u : network.flex_units)
    for (const char* k : {"p_up", "p_dn", "q_up", "q_dn"}) head.push_back(fmt::format("{}_{}", u.label, k));
  std::string out = join(head, ",") + "\n";
  for (const auto& r : records) {
    std::vector<std::string> row = {r.source,
                                    r.config_label,
                                    std::to_string(r.index),
                                    format_number(r.point.p),
                                    format_number(r.point.q),
                                    opt_number(r.pin.p_mw),
                                    opt_number(r.pin.q_mvar),
                                    format_number(r.setpoints.v_ref)};
    for (std::size_t g = 0; g < network.generators.size(); ++g) {
      row.push_back(format_number(r.setpoints.gen_p_mw[g]));
      row.push_back(format_number(r.setpoints.gen_q_mvar[g]));
    }
    for (const auto& u : r.setpoints.units)
      for (double v : u) row.push_back(format_number(v));
    out += join(row, ",") + "\n";
  }
  return out;
}

std::vector<SetpointRecord> parse_setpoints_csv(const NetworkCase& network, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty setpoints file");
  const std::size_t n_gen = network.generators.size(), n_unit = network.flex_units.size();
  const std::size_t width = 8 + 2 * n_gen + 4 * n_unit;
  if (split(line, ',').size() != width) throw std::runtime_error("setpoints header does not match the case");
  std::vector<SetpointRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != width) throw std::runtime_error(fmt::format("line {}: expected {} fields", lineno, width));
    try {
      SetpointRecord r;
      r.source = f[0];
      r.config_label = f[1];
      r.index = std::stoi(f[2]);
      r.point = {parse_number(f[3]), parse_number(f[4])};
      if (!f[5].empty()) r.pin.p_mw = parse_number(f[5]);
      if (!f[6].empty()) r.pin.q_mvar = parse_number(f[6]);
      r.setpoints.v_ref = parse_number(f[7]);
      std::size_t k = 8;
      for (std::size_t g = 0; g < n_gen; ++g) {
        r.setpoints.gen_p_mw.push_back(parse_number(f[k++]));
        r.setpoints.gen_q_mvar.push_back(parse_number(f[k++]));
      }
      for (std::size_t u = 0; u < n_unit; ++u) {
        std::array<double, 4> reg{};
        for (double& v : reg) v = parse_number(f[k++]);
        r.setpoints.units.push_back(reg);
      }
      out.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw std::runtime_error(fmt::format("line {}: {}", lineno, e.what()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string boundary_csv(const FlexibilityBoundary& boundary) {
  std::string out = "config_label,index,param,P_MW,Q_MVAr,status,iterations,gap_before,verified,binding_tags\n";
  for (const auto& v : boundary.vertices)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", boundary.config_label, v.index, format_number(v.param),
                       format_number(v.point.p), format_number(v.point.q), to_string(v.status), v.iterations,
                       v.gap_before ? 1 : 0, v.verified ? 1 : 0, join(v.binding, ";"));
  return out;
}

std::string surface_csv(const NetworkCase& network, const CostSurface& surface) {
  std::string out = "i,j,P_MW,Q_MVAr,feasible,status,total_cost";
  for (const auto& u : network.flex_units)
    for (const char* k : {"p_up", "p_dn", "q_up", "q_dn"}) out += fmt::format(",{}_{}", u.label, k);
  out += ",binding_tags\n";
  for (int j = 0; j < surface.grid.n_q; ++j)
    for (int i = 0; i < surface.grid.n_p; ++i) {
      const DispatchPoint& d = surface.at(i, j);
      out += fmt::format("{},{},{},{},{},{},{}", i, j, format_number(d.target.p_mw), format_number(d.target.q_mvar),
                         d.feasible ? 1 : 0, to_string(d.status),
                         d.feasible ? format_number(d.total_cost) : std::string("nan"));
      for (const auto& r : d.units)
        out += fmt::format(",{},{},{},{}", format_number(r.p_up), format_number(r.p_dn), format_number(r.q_up),
                           format_number(r.q_dn));
      out += "," + join(d.binding, ";") + "\n";
    }
  return out;
}

std::string secure_csv(const SecureArea& area) {
  std::string out = "piece,index,P_MW,Q_MVAr\n";
  for (std::size_t k = 0; k < area.pieces.size(); ++k)
    for (std::size_t i = 0; i < area.pieces[k].size(); ++i)
      out += fmt::format("{},{},{},{}\n", k, i, format_number(area.pieces[k][i].p), format_number(area.pieces[k][i].q));
  return out;
}

// ---------------------------------------------------------------------------
// JSON

json boundary_json(const FlexibilityBoundary& boundary, const Configuration& config) {
  json doc;
  doc["config_label"] = boundary.config_label;
  doc["topology"] = to_string(config.topology);
  doc["mode"] = to_string(boundary.mode);
  doc["base_point"] = point_json(boundary.base_point);
  doc["degenerate"] = boundary.degenerate;
  doc["area_mva2"] = boundary.area();
  doc["vertex_count"] = boundary.vertices.size();
  int verified = 0, gaps = 0;
  for (const auto& v : boundary.vertices) {
    verified += v.verified ? 1 : 0;
    gaps += v.gap_before ? 1 : 0;
  }
  doc["verified_count"] = verified;
  doc["gap_count"] = gaps;
  doc["polygon"] = polygon_json(boundary.polygon());
  json fails = json::array();
  for (const auto& f : boundary.failures)
    fails.push_back({{"index", f.index}, {"param", f.param}, {"status", to_string(f.status)}, {"message", f.message}});
  doc["failures"] = fails;
  return doc;
}

json surface_json(const CostSurface& surface) {
  json doc;
  doc["config_label"] = surface.config_label;
  doc["grid"] = {{"p0", surface.grid.p0},   {"q0", surface.grid.q0},   {"step", surface.grid.step},
                 {"n_p", surface.grid.n_p}, {"n_q", surface.grid.n_q}};
  doc["base_point"] = point_json(surface.base_point);
  doc["feasible_count"] = surface.feasible_count();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& d : surface.points)
    if (d.feasible) {
      lo = std::min(lo, d.total_cost);
      hi = std::max(hi, d.total_cost);
    }
  doc["min_cost"] = surface.feasible_count() ? json(lo) : json(nullptr);
  doc["max_cost"] = surface.feasible_count() ? json(hi) : json(nullptr);
  json fails = json::array();
  for (const auto& f : surface.failures)
    fails.push_back({{"i", f.i},
                     {"j", f.j},
                     {"target", point_json(f.target)},
                     {"status", to_string(f.status)},
                     {"message", f.message}});
  doc["failures"] = fails;
  return doc;
}

json comparison_json(const SurfaceComparison& cmp) {
  json doc;
  doc["a"] = cmp.label_a;
  doc["b"] = cmp.label_b;
  doc["common_feasible"] = cmp.common_feasible;
  doc["gained"] = cmp.gained;
  doc["lost"] = cmp.lost;
  doc["b_cheaper"] = cmp.b_cheaper;
  doc["delta_b_minus_a"] = {{"max", cmp.max_delta}, {"min", cmp.min_delta}, {"mean", cmp.mean_delta}};
  doc["area_gained_mva2"] = cmp.area_gained;
  int b_dearer = 0;
  for (double d : cmp.delta) b_dearer += (!std::isnan(d) && d > 1e-4) ? 1 : 0;
  doc["b_dearer"] = b_dearer;
  return doc;
}

json secure_json(const SecureArea& area, const std::vector<std::string>& empty_labels) {
  json doc;
  doc["configurations"] = area.labels;
  doc["infeasible_configurations"] = empty_labels;
  doc["empty"] = area.empty();
  doc["area_mva2"] = area.area();
  json pieces = json::array();
  for (const auto& p : area.pieces) pieces.push_back(polygon_json(p));
  doc["pieces"] = pieces;
  return doc;
}

json verification_json(const VerificationReport& report) {
  json doc;
  doc["passed"] = report.passed();
  json checks = json::array();
  for (const auto& c : report.checks)
    checks.push_back({{"family", c.family}, {"passed", c.passed}, {"worst", c.worst}, {"offenders", c.offenders}});
  doc["checks"] = checks;
  doc["oracle_losses_mw"] = report.oracle_losses_mw;
  return doc;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

struct Rgb {
  int r, g, b;
};

Rgb mix(Rgb a, Rgb b, double t) {
  t = std::clamp(t, 0.0, 1.0);
  return {static_cast<int>(std::lround(a.r + (b.r - a.r) * t)), static_cast<int>(std::lround(a.g + (b.g - a.g) * t)),
          static_cast<int>(std::lround(a.b + (b.b - a.b) * t))};
}

std::string hex(Rgb c) { return fmt::format("#{:02x}{:02x}{:02x}", c.r, c.g, c.b); }

constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kRed{178, 24, 43};
constexpr Rgb kBlue{33, 102, 172};

/// t in [-1, 1]; negative red, positive blue.
Rgb diverging(double t) { return t < 0 ? mix(kWhite, kRed, -t) : mix(kWhite, kBlue, t); }

Rgb sequential(double t) {
  const Rgb a{255, 255, 204}, b{65, 182, 196}, c{37, 52, 148};
  t = std::clamp(t, 0.0, 1.0);
  return t < 0.5 ? mix(a, b, 2 * t) : mix(b, c, 2 * t - 1);
}

const char* kLineColours[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"};

std::string num(double v) { return fmt::format("{:.6g}", v); }

double nice_step(double range) {
  if (!(range > 0)) return 1.0;
  const double raw = range / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

struct Panel {
  double p_lo, p_hi, q_lo, q_hi;
  double x0, y0, w, h;  // pixel box

  double sx(double p) const { return x0 + (p - p_lo) / (p_hi - p_lo) * w; }
  double sy(double q) const { return y0 + h - (q - q_lo) / (q_hi - q_lo) * h; }

  std::string axes(const std::string& title) const {
    std::string out = fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#000"/>)" "\n",
                                  num(x0), num(y0), num(w), num(h));
    const double dp = nice_step(p_hi - p_lo), dq = nice_step(q_hi - q_lo);
    for (double p = std::ceil(p_lo / dp) * dp; p <= p_hi + 1e-12; p += dp)
      out += fmt::format(R"(<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#000"/><text x="{0}" y="{3}" )"
                         R"(font-size="10" text-anchor="middle">{4}</text>)" "\n",
                         num(sx(p)), num(y0 + h), num(y0 + h + 4), num(y0 + h + 15), num(std::abs(p) < 1e-12 ? 0 : p));
    for (double q = std::ceil(q_lo / dq) * dq; q <= q_hi + 1e-12; q += dq)
      out += fmt::format(R"(<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#000"/><text x="{3}" y="{4}" )"
                         R"(font-size="10" text-anchor="end">{5}</text>)" "\n",
                         num(x0 - 4), num(sy(q)), num(x0), num(x0 - 6), num(sy(q) + 3),
                         num(std::abs(q) < 1e-12 ? 0 : q));
    out += fmt::format(R"(<text x="{}" y="{}" font-size="11" text-anchor="middle">P (MW)</text>)" "\n",
                       num(x0 + w / 2), num(y0 + h + 30));
    out += fmt::format(R"(<text x="{0}" y="{1}" font-size="11" text-anchor="middle" )"
                       R"svg(transform="rotate(-90 {0} {1})">Q (MVAr)</text>)svg" "\n",
                       num(x0 - 38), num(y0 + h / 2));
    out += fmt::format(R"(<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>)" "\n", num(x0 + w / 2),
                       num(y0 - 8), title);
    return out;
  }
};

std::string svg_open(double width, double height, const SvgOptions& opt) {
  std::string out = fmt::format(
      R"(<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}" font-family="sans-serif">)"
      "\n",
      num(width), num(height));
  if (opt.timestamp) out += fmt::format("<metadata>generated {}</metadata>\n", *opt.timestamp);
  out += fmt::format(R"(<rect width="{}" height="{}" fill="#fff"/>)" "\n", num(width), num(height));
  return out;
}

std::string polygon_points(const Panel& pn, const Polygon& poly) {
  std::string pts;
  for (const auto& p : poly) pts += fmt::format("{}{},{}", pts.empty() ? "" : " ", num(pn.sx(p.p)), num(pn.sy(p.q)));
  return pts;
}

Panel grid_panel(const GridSpec& g, double x0, double y0, double w, double h) {
  const double half = g.step / 2;
  return {g.p0 - half, g.p0 + (g.n_p - 1) * g.step + half, g.q0 - half, g.q0 + (g.n_q - 1) * g.step + half,
          x0,          y0,
          w,           h};
}

/// Filled cells; `colour` returns nullopt for white.
template <class F>
std::string cells(const Panel& pn, const GridSpec& g, F colour) {
  std::string out;
  const double cw = pn.w / g.n_p, ch = pn.h / g.n_q;
  for (int j = 0; j < g.n_q; ++j)
    for (int i = 0; i < g.n_p; ++i) {
      const std::optional<Rgb> c = colour(i, j);
      if (!c) continue;
      const Point n = g.node(i, j);
      out += fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>)" "\n", num(pn.sx(n.p) - cw / 2),
                         num(pn.sy(n.q) - ch / 2), num(cw * 1.02), num(ch * 1.02), hex(*c));
    }
  return out;
}

std::string colour_bar(double x, double y, double h, double lo, double hi, Rgb (*palette)(double), bool signed_scale,
                       const std::string& label) {
  std::string out;
  const int n = 40;
  for (int k = 0; k < n; ++k) {
    const double t = (k + 0.5) / n;
    const double v = signed_scale ? 1.0 - 2.0 * t : 1.0 - t;
    out += fmt::format(R"(<rect x="{}" y="{}" width="14" height="{}" fill="{}"/>)" "\n", num(x), num(y + k * h / n),
                       num(h / n + 0.5), hex(palette(v)));
  }
  out += fmt::format(R"(<rect x="{}" y="{}" width="14" height="{}" fill="none" stroke="#000"/>)" "\n", num(x), num(y),
                     num(h));
  out += fmt::format(R"(<text x="{}" y="{}" font-size="10">{}</text>)" "\n", num(x + 18), num(y + 8), num(hi));
  out += fmt::format(R"(<text x="{}" y="{}" font-size="10">{}</text>)" "\n", num(x + 18), num(y + h), num(lo));
  out += fmt::format(R"(<text x="{}" y="{}" font-size="10">{}</text>)" "\n", num(x), num(y - 6), label);
  return out;
}

Rgb diverging_fn(double t) { return diverging(t); }
Rgb sequential_fn(double t) { return sequential(t); }

std::string base_marker(const Panel& pn, const Point& p) {
  return fmt::format(R"(<circle cx="{}" cy="{}" r="4" fill="#000"/>)" "\n", num(pn.sx(p.p)), num(pn.sy(p.q)));
}

std::pair<double, double> cost_range(const std::vector<const CostSurface*>& surfaces) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* s : surfaces)
    for (const auto& d : s->points)
      if (d.feasible) {
        lo = std::min(lo, d.total_cost);
        hi = std::max(hi, d.total_cost);
      }
  if (!(lo <= hi)) return {0.0, 1.0};
  if (hi - lo < 1e-9) hi = lo + 1.0;
  return {lo, hi};
}

std::string cost_panel(const CostSurface& s, double x0, double lo, double hi, const std::string& title) {
  const Panel pn = grid_panel(s.grid, x0, 40, 360, 360);
  std::string out = cells(pn, s.grid, [&](int i, int j) -> std::optional<Rgb> {
    const auto& d = s.at(i, j);
    if (!d.feasible) return std::nullopt;
    return sequential((d.total_cost - lo) / (hi - lo));
  });
  out += base_marker(pn, s.base_point);
  out += pn.axes(title);
  return out;
}

}  // namespace

std::string overlay_svg(const std::vector<FlexibilityBoundary>& boundaries, const SecureArea* secure,
                        const SvgOptions& opt) {
  double p_lo = std::numeric_limits<double>::infinity(), p_hi = -p_lo, q_lo = p_lo, q_hi = -p_lo;
  auto grow = [&](const Point& p) {
    p_lo = std::min(p_lo, p.p);
    p_hi = std::max(p_hi, p.p);
    q_lo = std::min(q_lo, p.q);
    q_hi = std::max(q_hi, p.q);
  };
  for (const auto& b : boundaries) {
    grow(b.base_point);
    for (const auto& v : b.vertices) grow(v.point);
  }
  if (!(p_lo <= p_hi)) p_lo = q_lo = -1, p_hi = q_hi = 1;
  const double pad = 0.05 * std::max({p_hi - p_lo, q_hi - q_lo, 1e-3});
  const Panel pn{p_lo - pad, p_hi + pad, q_lo - pad, q_hi + pad, 70, 40, 480, 480};

  std::string out = svg_open(720, 580, opt);
  if (secure)
    for (const auto& piece : secure->pieces)
      out += fmt::format(R"(<polygon points="{}" fill="#4daf4a" fill-opacity="0.45" stroke="#2b7a2b"/>)" "\n",
                         polygon_points(pn, piece));
  for (std::size_t k = 0; k < boundaries.size(); ++k) {
    const auto& b = boundaries[k];
    const char* colour = kLineColours[k % std::size(kLineColours)];
    if (b.vertices.size() >= 3)
      out += fmt::format(R"(<polygon points="{}" fill="none" stroke="{}" stroke-width="1.5"/>)" "\n",
                         polygon_points(pn, b.polygon()), colour);
    out += base_marker(pn, b.base_point);
    const double ly = 60 + 18 * static_cast<double>(k);
    out += fmt::format(R"(<line x1="570" y1="{0}" x2="595" y2="{0}" stroke="{1}" stroke-width="2"/>)"
                       R"(<text x="600" y="{2}" font-size="11">{3}</text>)" "\n",
                       num(ly), colour, num(ly + 4), b.config_label);
  }
  if (secure) {
    const double ly = 60 + 18 * static_cast<double>(boundaries.size());
    out += fmt::format(R"(<rect x="570" y="{}" width="25" height="10" fill="#4daf4a" fill-opacity="0.45"/>)"
                       R"(<text x="600" y="{}" font-size="11">secure area</text>)" "\n",
                       num(ly - 5), num(ly + 4));
  }
  out += pn.axes("Interface flexibility areas");
  out += "</svg>\n";
  return out;
}

std::string unit_map_svg(const NetworkCase& network, const CostSurface& surface, std::size_t unit,
                         const SvgOptions& opt) {
  const FlexUnit& fu = network.flex_units.at(unit);
  const double up = network.to_mw(fu.p_up_max), dn = network.to_mw(fu.p_dn_max);
  const Panel pn = grid_panel(surface.grid, 70, 40, 400, 400);
  std::string out = svg_open(580, 500, opt);
  out += cells(pn, surface.grid, [&](int i, int j) -> std::optional<Rgb> {
    const auto& d = surface.at(i, j);
    if (!d.feasible) return std::nullopt;
    const double net = d.units[unit].p_up - d.units[unit].p_dn;
    const double t = net >= 0 ? (up > 0 ? net / up : 0.0) : (dn > 0 ? net / dn : 0.0);
    return diverging(t);
  });
  out += base_marker(pn, surface.base_point);
  out += pn.axes(fmt::format("Unit {} (bus {}) active regulation, {}", fu.label, fu.bus, surface.config_label));
  out += colour_bar(500, 60, 300, -dn, up, diverging_fn, true, "MW");
  out += "</svg>\n";
  return out;
}

std::string cost_surface_svg(const CostSurface& surface, const SvgOptions& opt) {
  const auto [lo, hi] = cost_range({&surface});
  std::string out = svg_open(540, 460, opt);
  out += cost_panel(surface, 70, lo, hi, fmt::format("Total flexibility cost, {}", surface.config_label));
  out += colour_bar(460, 60, 300, lo, hi, sequential_fn, false, "$/h");
  out += "</svg>\n";
  return out;
}

std::string comparison_svg(const CostSurface& a, const CostSurface& b, const SurfaceComparison& cmp,
                           const SvgOptions& opt) {
  const auto [lo, hi] = cost_range({&a, &b});
  std::string out = svg_open(1460, 460, opt);
  out += cost_panel(a, 70, lo, hi, fmt::format("Cost, {}", a.config_label));
  out += cost_panel(b, 510, lo, hi, fmt::format("Cost, {}", b.config_label));
  out += colour_bar(885, 60, 300, lo, hi, sequential_fn, false, "$/h");

  double span = 0.0;
  for (double d : cmp.delta)
    if (!std::isnan(d)) span = std::max(span, std::abs(d));
  if (span <= 0) span = 1.0;
  const Panel pn = grid_panel(cmp.grid, 990, 40, 360, 360);
  // Blue where b is cheaper, red where it is dearer.
  out += cells(pn, cmp.grid, [&](int i, int j) -> std::optional<Rgb> {
    const double d = cmp.delta[static_cast<std::size_t>(cmp.grid.index(i, j))];
    if (std::isnan(d)) {
      if (!a.at(i, j).feasible && b.at(i, j).feasible) return Rgb{200, 200, 200};
      return std::nullopt;
    }
    return diverging(-d / span);
  });
  out += pn.axes(fmt::format("{} minus {}", b.config_label, a.config_label));
  out += colour_bar(1365, 60, 300, -span, span, [](double t) { return diverging(-t); }, true, "$/h");
  out += "</svg>\n";
  return out;
}

// ---------------------------------------------------------------------------
// run directory

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunDirectory::RunDirectory(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (std::filesystem::exists(dir_ / "manifest.json"))
    throw std::runtime_error(fmt::format("{} already holds a run manifest", dir_.string()));
  std::filesystem::create_directories(dir_);
}

void RunDirectory::write(const std::string& name, const std::string& content) {
  const auto path = dir_ / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << content;
  out.close();
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  outputs_.push_back({{"file", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
}

void RunDirectory::write_json(const std::string& name, const json& doc) { write(name, doc.dump(2) + "\n"); }

void RunDirectory::finish(json manifest) {
  manifest["outputs"] = outputs_;
  const auto path = dir_ / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << manifest.dump(2) << "\n";
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
}

}  // namespace pqflex
