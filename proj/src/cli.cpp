#include "pqflex/cli.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>

#include "pqflex/boundary.hpp"
#include "pqflex/config.hpp"
#include "pqflex/dispatch.hpp"
#include "pqflex/network.hpp"
#include "pqflex/oracle.hpp"
#include "pqflex/parallel.hpp"
#include "pqflex/report.hpp"
#include "pqflex/solve.hpp"

namespace pqflex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ComputeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalFlags {
  int jobs = default_jobs();
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<int> multistart;
  bool deterministic = false;
  std::string out_dir;
};

struct Loaded {
  std::string path;
  std::string bytes;
  NetworkCase network;
  std::vector<Configuration> configs;
};

Loaded load_input(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError(fmt::format("file not found: {}", path));
  Loaded in;
  in.path = path;
  in.bytes = read_file(path);
  try {
    in.network = parse_case(in.bytes);
  } catch (const CaseError& e) {
    if (e.line() > 0) throw UsageError(fmt::format("{}:{}:{}: {}", path, e.line(), e.column(), e.what()));
    throw UsageError(fmt::format("{}: {}", path, e.what()));
  }
  const auto diags = validate_case(in.network);
  if (!diags.empty()) {
    std::string msg = fmt::format("{}: case is invalid", path);
    for (const auto& d : diags) msg += fmt::format("\n  {} ({}): {}", d.code, d.element, d.message);
    throw UsageError(msg);
  }
  try {
    in.configs = enumerate_configurations(in.network);
  } catch (const EnumerationError& e) {
    throw UsageError(e.what());
  }
  return in;
}

std::vector<Configuration> select(const Loaded& in, const std::vector<std::string>& labels) {
  if (labels.empty()) return in.configs;
  std::vector<Configuration> out;
  for (const auto& l : labels) {
    try {
      out.push_back(find_configuration(in.configs, l));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

/// Every normally closed line in service: the normal state and its tie-switch variants.
std::vector<Configuration> normal_operation(const Loaded& in) {
  std::vector<Configuration> out;
  for (const auto& c : in.configs) {
    bool ok = true;
    for (const auto& [k, on] : c.statuses) ok = ok && (on || !in.network.lines[k].normal_status);
    if (ok) out.push_back(c);
  }
  return out;
}

SolverSettings solver_settings(const NetworkCase& network, const GlobalFlags& g) {
  SolverSettings s = settings_for(network);
  if (g.tol) s.tol_kkt = *g.tol;
  if (g.max_iter) s.max_iter = *g.max_iter;
  if (g.multistart) s.multistart = *g.multistart;
  return s;
}

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(t));
}

SvgOptions svg_options(const GlobalFlags& g) {
  SvgOptions o;
  if (!g.deterministic) o.timestamp = now_utc();
  return o;
}

RunDirectory open_run(const GlobalFlags& g, const std::string& command) {
  std::string dir = g.out_dir;
  if (dir.empty()) {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    dir = fmt::format("run-{}-{:%Y%m%d-%H%M%S}", command, fmt::gmtime(t));
  }
  try {
    return RunDirectory(dir);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
}

json manifest_base(const std::string& command, const Loaded& in, const std::vector<Configuration>& configs,
                   const SolverSettings& s, const GlobalFlags& g) {
  json m;
  m["tool"] = "pqflex";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["case"] = {{"path", in.path}, {"name", in.network.name}, {"sha256", sha256_hex(in.bytes)}, {"copy", "input.case"}};
  json labels = json::array();
  for (const auto& c : configs) labels.push_back(c.label);
  m["configurations"] = labels;
  m["solver"] = {{"tol_kkt", s.tol_kkt}, {"max_iter", s.max_iter}, {"multistart", s.multistart}};
  m["deterministic"] = g.deterministic;
  if (!g.deterministic) m["created"] = now_utc();
  return m;
}

struct Traced {
  Configuration config;
  std::optional<FlexibilityBoundary> boundary;
  std::string error;
};

std::vector<Traced> trace_all(const NetworkCase& network, const std::vector<Configuration>& configs,
                              const TraceOptions& opt) {
  std::vector<Traced> out;
  for (const auto& c : configs) {
    Traced t{c, std::nullopt, {}};
    try {
      t.boundary = trace_boundary(network, c, opt);
    } catch (const BoundaryTraceError& e) {
      t.error = e.what();
    } catch (const std::runtime_error& e) {
      t.error = fmt::format("{}: {}", c.label, e.what());
    }
    out.push_back(std::move(t));
  }
  return out;
}

int unverified_count(const FlexibilityBoundary& b) {
  int n = 0;
  for (const auto& v : b.vertices) n += v.verified || b.degenerate ? 0 : 1;
  return n;
}

void write_boundaries(RunDirectory& run, const NetworkCase& network, const std::vector<Traced>& traced) {
  json docs = json::array();
  for (const auto& t : traced) {
    if (!t.boundary) continue;
    const std::string stem = file_stem(t.config.label);
    run.write(fmt::format("boundary_{}.csv", stem), boundary_csv(*t.boundary));
    run.write(fmt::format("setpoints_boundary_{}.csv", stem),
              setpoints_csv(network, boundary_records(network, t.config, *t.boundary)));
    docs.push_back(boundary_json(*t.boundary, t.config));
  }
  run.write_json("boundaries.json", {{"boundaries", docs}});
}

TraceOptions trace_options(const std::string& mode, double step, int points, const SolverSettings& s,
                           const GlobalFlags& g) {
  TraceOptions opt;
  try {
    opt.mode = parse_sweep_mode(mode);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (opt.mode == SweepMode::PerimeterStep && !(step > 0)) throw UsageError("step must be positive");
  if (opt.mode == SweepMode::AngularSweep && points < 8) throw UsageError("angular sweep needs at least 8 points");
  opt.step_mva = step;
  opt.n_points = points;
  opt.solver = s;
  opt.jobs = g.jobs;
  return opt;
}

json trace_parameters(const TraceOptions& opt) {
  json p = {{"mode", to_string(opt.mode)}, {"chunk", opt.chunk}};
  if (opt.mode == SweepMode::PerimeterStep)
    p["step_mva"] = opt.step_mva;
  else
    p["points"] = opt.n_points;
  return p;
}

// ---------------------------------------------------------------------------

struct TraceArgs {
  std::string case_path;
  std::vector<std::string> configs;
  std::string mode = "perimeter";
  double step = 0.08;
  int points = 200;
};

int cmd_trace(const TraceArgs& a, const GlobalFlags& g, std::ostream& out, std::ostream& err) {
  const Loaded in = load_input(a.case_path);
  const auto configs = select(in, a.configs);
  const SolverSettings s = solver_settings(in.network, g);
  const TraceOptions opt = trace_options(a.mode, a.step, a.points, s, g);

  const auto traced = trace_all(in.network, configs, opt);
  for (const auto& t : traced)
    if (!t.boundary) throw ComputeError(t.error);

  RunDirectory run = open_run(g, "trace");
  run.write("input.case", in.bytes);
  write_boundaries(run, in.network, traced);
  std::vector<FlexibilityBoundary> bs;
  for (const auto& t : traced) bs.push_back(*t.boundary);
  run.write("overlay.svg", overlay_svg(bs, nullptr, svg_options(g)));
  json m = manifest_base("trace", in, configs, s, g);
  m["parameters"] = trace_parameters(opt);
  run.finish(m);

  int unverified = 0;
  for (const auto& b : bs) {
    out << fmt::format("{:<16} area {:>10.4f} MVA^2  vertices {:>4}  failures {}\n", b.config_label, b.area(),
                       b.vertices.size(), b.failures.size());
    unverified += unverified_count(b);
  }
  out << fmt::format("wrote {}\n", run.path().string());
  if (unverified > 0) {
    err << fmt::format("error: {} boundary vertices failed oracle verification\n", unverified);
    return kExitVerification;
  }
  return kExitOk;
}

struct CostmapArgs {
  std::string case_path;
  std::vector<std::string> configs;
  std::string compare;
  double step = 0.05;
  double trace_step = 0.08;
  bool contingencies = false;
};

int cmd_costmap(const CostmapArgs& a, const GlobalFlags& g, std::ostream& out, std::ostream& err) {
  if (!(a.step > 0) || !(a.trace_step > 0)) throw UsageError("step must be positive");
  const Loaded in = load_input(a.case_path);
  std::vector<Configuration> configs;
  std::optional<std::pair<std::string, std::string>> pair;
  if (!a.compare.empty()) {
    const auto comma = a.compare.find(',');
    if (comma == std::string::npos || a.compare.find(',', comma + 1) != std::string::npos)
      throw UsageError("--compare expects two labels separated by a comma");
    pair = {a.compare.substr(0, comma), a.compare.substr(comma + 1)};
    configs = select(in, {pair->first, pair->second});
  } else {
    configs = !a.configs.empty() ? select(in, a.configs) : a.contingencies ? in.configs : normal_operation(in);
  }
  const SolverSettings s = solver_settings(in.network, g);
  TraceOptions topt = trace_options("perimeter", a.trace_step, 200, s, g);

  // The grid spans every selected boundary and is anchored at the first base point.
  const auto traced = trace_all(in.network, configs, topt);
  Point lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Point hi{-lo.p, -lo.q};
  std::optional<Point> anchor;
  for (const auto& t : traced) {
    if (!t.boundary) {
      err << fmt::format("warning: {}\n", t.error);
      continue;
    }
    if (!anchor) anchor = t.boundary->base_point;
    for (const auto& v : t.boundary->vertices) {
      lo = {std::min(lo.p, v.point.p), std::min(lo.q, v.point.q)};
      hi = {std::max(hi.p, v.point.p), std::max(hi.q, v.point.q)};
    }
  }
  if (!anchor) throw ComputeError("no configuration produced a flexibility boundary");
  const GridSpec grid = make_grid(lo, hi, *anchor, a.step);

  CostMapOptions copt;
  copt.solver = s;
  copt.jobs = g.jobs;
  copt.keep_solutions = true;
  std::vector<CostSurface> surfaces;
  for (const auto& c : configs) surfaces.push_back(cost_map(in.network, c, grid, copt));

  RunDirectory run = open_run(g, "costmap");
  run.write("input.case", in.bytes);
  const SvgOptions svg = svg_options(g);
  json docs = json::array();
  std::size_t failures = 0;
  for (std::size_t k = 0; k < surfaces.size(); ++k) {
    const auto& sf = surfaces[k];
    const std::string stem = file_stem(sf.config_label);
    run.write(fmt::format("surface_{}.csv", stem), surface_csv(in.network, sf));
    run.write(fmt::format("setpoints_surface_{}.csv", stem),
              setpoints_csv(in.network, surface_records(in.network, configs[k], sf)));
    run.write(fmt::format("cost_{}.svg", stem), cost_surface_svg(sf, svg));
    for (std::size_t u = 0; u < in.network.flex_units.size(); ++u)
      run.write(fmt::format("unit_{}_{}.svg", stem, file_stem(in.network.flex_units[u].label)),
                unit_map_svg(in.network, sf, u, svg));
    json d = surface_json(sf);
    for (const auto& t : traced)
      if (t.config.label == sf.config_label && t.boundary) d["boundary"] = boundary_json(*t.boundary, t.config);
    docs.push_back(d);
    failures += sf.failures.size();
    out << fmt::format("{:<16} feasible {:>6} / {:<6} failures {}\n", sf.config_label, sf.feasible_count(),
                       grid.size(), sf.failures.size());
  }
  run.write_json("costmap.json", {{"grid", {{"p0", grid.p0}, {"q0", grid.q0}, {"step", grid.step},
                                            {"n_p", grid.n_p}, {"n_q", grid.n_q}}},
                                  {"surfaces", docs}});
  if (pair) {
    const SurfaceComparison cmp = compare_surfaces(surfaces[0], surfaces[1]);
    run.write_json("comparison.json", comparison_json(cmp));
    run.write("comparison.svg", comparison_svg(surfaces[0], surfaces[1], cmp, svg));
    out << fmt::format("{} vs {}: common {}  gained {}  lost {}  cheaper {}  delta [{:.4f}, {:.4f}] $/h\n",
                       cmp.label_b, cmp.label_a, cmp.common_feasible, cmp.gained, cmp.lost, cmp.b_cheaper,
                       cmp.min_delta, cmp.max_delta);
  }
  json m = manifest_base("costmap", in, configs, s, g);
  m["parameters"] = {{"step_mva", a.step}, {"trace", trace_parameters(topt)}};
  if (pair) m["parameters"]["compare"] = {pair->first, pair->second};
  run.finish(m);
  out << fmt::format("wrote {}\n", run.path().string());
  if (failures > 0) {
    err << fmt::format("error: {} grid nodes ended in a numerical failure (see costmap.json)\n", failures);
    return kExitComputation;
  }
  return kExitOk;
}

int cmd_secure(const TraceArgs& a, const GlobalFlags& g, std::ostream& out, std::ostream& err) {
  const Loaded in = load_input(a.case_path);
  const auto configs = select(in, a.configs);
  const SolverSettings s = solver_settings(in.network, g);
  const TraceOptions opt = trace_options(a.mode, a.step, a.points, s, g);

  const auto traced = trace_all(in.network, configs, opt);
  std::vector<FlexibilityBoundary> bs;
  std::vector<std::string> empty_labels;
  for (const auto& t : traced) {
    if (t.boundary) {
      bs.push_back(*t.boundary);
    } else {
      empty_labels.push_back(t.config.label);
      err << fmt::format("warning: {} has an empty flexibility area: {}\n", t.config.label, t.error);
    }
  }
  SecureArea area;
  if (empty_labels.empty()) {
    area = intersect_areas(bs);
  } else {
    for (const auto& c : configs) area.labels.push_back(c.label);
  }
  if (area.empty()) err << "warning: the secure area is empty\n";

  RunDirectory run = open_run(g, "secure");
  run.write("input.case", in.bytes);
  write_boundaries(run, in.network, traced);
  run.write("secure.csv", secure_csv(area));
  run.write_json("secure.json", secure_json(area, empty_labels));
  run.write("overlay.svg", overlay_svg(bs, &area, svg_options(g)));
  json m = manifest_base("secure", in, configs, s, g);
  m["parameters"] = trace_parameters(opt);
  run.finish(m);

  int unverified = 0;
  for (const auto& b : bs) {
    out << fmt::format("{:<16} area {:>10.4f} MVA^2\n", b.config_label, b.area());
    unverified += unverified_count(b);
  }
  out << fmt::format("{:<16} area {:>10.4f} MVA^2  pieces {}\n", "secure", area.area(), area.pieces.size());
  out << fmt::format("wrote {}\n", run.path().string());
  if (unverified > 0) {
    err << fmt::format("error: {} boundary vertices failed oracle verification\n", unverified);
    return kExitVerification;
  }
  return kExitOk;
}

int cmd_validate(const std::string& dir, double tol, const GlobalFlags& g, std::ostream& out, std::ostream& err) {
  const fs::path root(dir);
  if (!fs::is_directory(root) || !fs::exists(root / "manifest.json"))
    throw UsageError(fmt::format("no manifest in {}", dir));
  json manifest;
  try {
    manifest = json::parse(read_file(root / "manifest.json"));
  } catch (const json::exception& e) {
    err << fmt::format("manifest.json: corrupted ({})\n", e.what());
    return kExitVerification;
  }

  int problems = 0;
  std::set<std::string> intact;
  for (const auto& o : manifest.value("outputs", json::array())) {
    const std::string name = o.value("file", "");
    const fs::path path = root / name;
    if (!fs::is_regular_file(path)) {
      err << fmt::format("{}: missing\n", name);
      ++problems;
      continue;
    }
    if (sha256_hex(read_file(path)) != o.value("sha256", "")) {
      err << fmt::format("{}: hash mismatch\n", name);
      ++problems;
      continue;
    }
    intact.insert(name);
  }
  if (!intact.count("input.case")) {
    err << "input.case: cannot re-verify solutions without the case copy\n";
    return kExitVerification;
  }
  const std::string case_bytes = read_file(root / "input.case");
  if (manifest.contains("case") && manifest["case"].value("sha256", "") != sha256_hex(case_bytes)) {
    err << "input.case: hash differs from the recorded case hash\n";
    ++problems;
  }
  const NetworkCase network = parse_case(case_bytes);
  const auto configs = enumerate_configurations(network);

  std::size_t checked = 0;
  for (const auto& name : intact) {
    if (name.rfind("setpoints_", 0) != 0) continue;
    std::vector<SetpointRecord> records;
    try {
      records = parse_setpoints_csv(network, read_file(root / name));
    } catch (const std::exception& e) {
      err << fmt::format("{}: unreadable ({})\n", name, e.what());
      ++problems;
      continue;
    }
    std::vector<std::string> failures(records.size());
    parallel_for(records.size(), g.jobs, [&](std::size_t k) {
      const SetpointRecord& r = records[k];
      const Configuration* config = nullptr;
      for (const auto& c : configs)
        if (c.label == r.config_label) config = &c;
      if (!config) {
        failures[k] = fmt::format("unknown configuration '{}'", r.config_label);
        return;
      }
      const VerificationReport rep = verify_setpoints(network, *config, r.setpoints, r.pin, tol);
      std::string msg;
      for (const auto& c : rep.checks)
        if (!c.passed) {
          msg += fmt::format(" {} ({:.3e}", c.family, c.worst);
          for (const auto& o : c.offenders) msg += ", " + o;
          msg += ")";
        }
      if (rep.flow.converged) {
        const double dp = network.to_pu_power(std::abs(rep.flow.slack_p_mw - r.point.p));
        const double dq = network.to_pu_power(std::abs(rep.flow.slack_q_mvar - r.point.q));
        if (std::max(dp, dq) > tol) msg += fmt::format(" recorded_point ({:.3e})", std::max(dp, dq));
        // The reference generator covers whatever the slack bus does not.
        const std::size_t ref = network.ref_index();
        const BusInjection rest = injections_from_setpoints(network, r.setpoints)[ref];
        for (std::size_t gi = 0; gi < network.generators.size(); ++gi) {
          if (!network.generators[gi].is_reference) continue;
          const double ep = std::abs(network.to_pu_power(r.setpoints.gen_p_mw[gi] - rep.flow.slack_p_mw) + rest.p);
          const double eq = std::abs(network.to_pu_power(r.setpoints.gen_q_mvar[gi] - rep.flow.slack_q_mvar) + rest.q);
          if (std::max(ep, eq) > tol) msg += fmt::format(" reference_output ({:.3e})", std::max(ep, eq));
        }
      }
      failures[k] = msg;
    });
    for (std::size_t k = 0; k < records.size(); ++k)
      if (!failures[k].empty()) {
        err << fmt::format("{}: {} {} index {}:{}\n", name, records[k].source, records[k].config_label,
                           records[k].index, failures[k]);
        ++problems;
      }
    checked += records.size();
  }
  out << fmt::format("checked {} files, re-verified {} solutions, {} problems\n", intact.size(), checked, problems);
  return problems == 0 ? kExitOk : kExitVerification;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"P-Q flexibility areas of distribution networks under switch configurations", "pqflex"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);

  GlobalFlags g;
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--tol", g.tol, "Solver KKT tolerance (validate: verification tolerance, default 1e-5)");
  app.add_option("--max-iter", g.max_iter, "Interior-point iteration limit");
  app.add_option("--multistart", g.multistart, "Extra randomised starts per solve");
  app.add_flag("--deterministic", g.deterministic, "Omit timestamps from all outputs");
  app.add_option("--out", g.out_dir, "Run directory");

  TraceArgs trace_args, secure_args;
  auto add_trace_flags = [](CLI::App* sub, TraceArgs& a) {
    sub->add_option("case", a.case_path, "Case file")->required();
    sub->add_option("--config", a.configs, "Configuration labels")->delimiter(',');
    sub->add_option("--mode", a.mode, "angular or perimeter");
    sub->add_option("--step", a.step, "Perimeter step (MW)");
    sub->add_option("--points", a.points, "Angular sweep directions");
  };
  auto* trace = app.add_subcommand("trace", "Trace flexibility boundaries");
  add_trace_flags(trace, trace_args);
  auto* secure = app.add_subcommand("secure", "Intersect the boundaries of all configurations");
  add_trace_flags(secure, secure_args);

  CostmapArgs cm;
  auto* costmap = app.add_subcommand("costmap", "Least-cost dispatch over a P-Q grid");
  costmap->add_option("case", cm.case_path, "Case file")->required();
  costmap->add_option("--config", cm.configs, "Configuration labels")->delimiter(',');
  costmap->add_option("--compare", cm.compare, "Two labels a,b; reports cost(b) - cost(a)");
  costmap->add_option("--step", cm.step, "Grid step (MW / MVAr)");
  costmap->add_flag("--contingencies", cm.contingencies, "Include contingency configurations");
  costmap->add_option("--trace-step", cm.trace_step, "Perimeter step of the bounding traces");

  std::string run_dir;
  auto* validate = app.add_subcommand("validate", "Re-verify a run directory");
  validate->add_option("dir", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*trace) return cmd_trace(trace_args, g, out, err);
    if (*secure) return cmd_secure(secure_args, g, out, err);
    if (*costmap) return cmd_costmap(cm, g, out, err);
    return cmd_validate(run_dir, g.tol.value_or(1e-5), g, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitComputation;
  }
}

}  // namespace pqflex
