#include "pqflex/boundary.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "pqflex/oracle.hpp"
#include "pqflex/parallel.hpp"
#include "pqflex/solve.hpp"

namespace pqflex {

const char* to_string(SweepMode mode) { return mode == SweepMode::AngularSweep ? "angular" : "perimeter"; }

SweepMode parse_sweep_mode(const std::string& text) {
  if (text == "angular") return SweepMode::AngularSweep;
  if (text == "perimeter") return SweepMode::PerimeterStep;
  throw std::invalid_argument(fmt::format("unknown sweep mode '{}' (expected angular or perimeter)", text));
}

Polygon FlexibilityBoundary::polygon() const {
  Polygon out;
  for (const auto& v : vertices) out.push_back(v.point);
  return out;
}

BoundaryTraceError::BoundaryTraceError(std::string label, std::vector<TraceFailure> failures)
    : std::runtime_error(fmt::format("boundary trace failed for {}: {} failed solves, fewer than 3 vertices", label,
                                     failures.size())),
      config_label(std::move(label)),
      failures(std::move(failures)) {}

Point base_point(const NetworkCase& network, const Configuration& config) {
  PowerFlowOptions opt;
  const Bus& ref = network.buses[network.ref_index()];
  opt.v_ref = std::clamp(1.0, ref.v_min, ref.v_max);
  const auto pf = ac_power_flow(network, config, base_injections(network), opt);
  if (!pf.converged)
    throw std::runtime_error(fmt::format("base operating point of {} did not converge", config.label));
  return {pf.slack_p_mw, pf.slack_q_mvar};
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool has_flexibility(const NetworkCase& network) {
  for (const auto& u : network.flex_units)
    if (u.p_up_max > 0 || u.p_dn_max > 0 || u.q_up_max > 0 || u.q_dn_max > 0) return true;
  for (const auto& g : network.generators)
    if (!g.is_reference && (g.p_max > g.p_min || g.q_max > g.q_min)) return true;
  return false;
}

struct Slot {
  ObjectiveSpec spec;
  double param = kNaN;
  std::optional<BoundaryVertex> vertex;
  std::optional<TraceFailure> failure;
};

class Tracer {
 public:
  Tracer(const NetworkCase& network, const Configuration& config, const TraceOptions& options)
      : network_(network), config_(config), options_(options) {}

  // Solves slots [begin, end) in chunks; each chunk is a warm-started chain.
  void run(std::vector<Slot>& slots, std::size_t begin, std::size_t end) {
    const std::size_t chunk = static_cast<std::size_t>(std::max(1, options_.chunk));
    const std::size_t n_chunks = (end - begin + chunk - 1) / chunk;
    parallel_for(n_chunks, options_.jobs, [&](std::size_t c) {
      std::optional<Vector> warm;
      for (std::size_t k = begin + c * chunk; k < std::min(end, begin + (c + 1) * chunk); ++k) {
        solve_slot(slots[k], static_cast<int>(k), warm);
        warm = slots[k].vertex ? std::optional<Vector>(slots[k].vertex->x) : std::nullopt;
      }
    });
  }

 /// Re-solves `slot` from each seed vertex; returns the optima that improve on it.
  std::vector<Slot> retry(const Slot& slot, int index, const std::vector<const Slot*>& seeds) {
    const auto objective = [&](const Slot& s) {
      return slot.spec.w_p * s.vertex->point.p + slot.spec.w_q * s.vertex->point.q;
    };
    std::vector<Slot> out;
    for (const Slot* seed : seeds) {
      if (!seed->vertex) continue;
      Slot trial;
      trial.spec = slot.spec;
      trial.param = slot.param;
      solve_slot(trial, index, seed->vertex->x);
      if (trial.vertex && (!slot.vertex || objective(trial) < objective(slot) - 1e-9)) out.push_back(std::move(trial));
    }
    return out;
  }

 private:
  void solve_slot(Slot& slot, int index, const std::optional<Vector>& warm) {
    const QcpProblem problem = build_problem(network_, config_, slot.spec);
    const QcpSolution sol = solve(problem, options_.solver, warm);
    if (sol.status != SolveStatus::Optimal) {
      slot.failure = TraceFailure{index, slot.param, sol.status, sol.message};
      return;
    }
    BoundaryVertex v;
    v.index = index;
    v.param = slot.param;
    v.point = {problem.interface_p_mw(sol.x), problem.interface_q_mvar(sol.x)};
    v.status = sol.status;
    v.iterations = sol.iterations;
    v.binding = problem.binding_tags(sol.x);
    v.spec = slot.spec;
    v.x = sol.x;
    v.verified = !options_.verify || verify_point(network_, config_, problem, sol.x).passed();
    slot.vertex = std::move(v);
  }

  const NetworkCase& network_;
  const Configuration& config_;
  const TraceOptions& options_;
};

void assemble(std::vector<Slot>& slots, FlexibilityBoundary& out) {
  bool gap = false;
  for (auto& slot : slots) {
    if (slot.failure) {
      out.failures.push_back(*slot.failure);
      gap = true;
      continue;
    }
    if (!slot.vertex) continue;
    BoundaryVertex v = std::move(*slot.vertex);
    if (!out.vertices.empty()) {
      const Point& last = out.vertices.back().point;
      if (std::hypot(v.point.p - last.p, v.point.q - last.q) <= 1e-6) continue;
    }
    v.gap_before = gap && !out.vertices.empty();
    gap = false;
    out.vertices.push_back(std::move(v));
  }
  while (out.vertices.size() > 1) {
    const Point& a = out.vertices.front().point;
    const Point& b = out.vertices.back().point;
    if (std::hypot(a.p - b.p, a.q - b.q) > 1e-6) break;
    out.vertices.pop_back();
  }
  if (gap && !out.vertices.empty()) out.vertices.front().gap_before = true;
}

}  // namespace

FlexibilityBoundary trace_boundary(const NetworkCase& network, const Configuration& config,
                                   const TraceOptions& options) {
  if (!is_connected(network, config))
    throw std::invalid_argument(fmt::format("configuration {} is not connected", config.label));
  FlexibilityBoundary out;
  out.config_label = config.label;
  out.mode = options.mode;
  out.base_point = base_point(network, config);
  if (!has_flexibility(network)) {
    out.degenerate = true;
    BoundaryVertex v;
    v.point = out.base_point;
    v.param = kNaN;
    v.verified = true;
    out.vertices.push_back(v);
    return out;
  }

  Tracer tracer(network, config, options);
  std::vector<Slot> slots;
  if (options.mode == SweepMode::AngularSweep) {
    if (options.n_points < 8) throw std::invalid_argument("angular sweep needs at least 8 points");
    for (int k = 0; k < options.n_points; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / options.n_points;
      Slot s;
      s.spec = ObjectiveSpec::boundary(-std::cos(theta), -std::sin(theta));
      s.param = theta;
      slots.push_back(std::move(s));
    }
    tracer.run(slots, 0, slots.size());
  } else {
    if (!(options.step_mva > 0)) throw std::invalid_argument("step must be positive");
    // Ends of the P range, slightly tilted to pick the Q extremes of a vertical edge.
    constexpr double tilt = 1e-3;
    std::vector<Slot> ends(4);
    ends[0].spec = ObjectiveSpec::boundary(1.0, tilt);    // left, low Q
    ends[1].spec = ObjectiveSpec::boundary(-1.0, tilt);   // right, low Q
    ends[2].spec = ObjectiveSpec::boundary(-1.0, -tilt);  // right, high Q
    ends[3].spec = ObjectiveSpec::boundary(1.0, -tilt);   // left, high Q
    tracer.run(ends, 0, 4);
    double p_lo = std::numeric_limits<double>::infinity();
    double p_hi = -p_lo;
    for (const auto& e : ends) {
      if (!e.vertex) continue;
      p_lo = std::min(p_lo, e.vertex->point.p);
      p_hi = std::max(p_hi, e.vertex->point.p);
    }
    if (!(p_lo < p_hi)) {
      std::vector<TraceFailure> failures;
      for (int k = 0; k < 4; ++k)
        if (ends[k].failure) failures.push_back(*ends[k].failure);
      throw BoundaryTraceError(config.label, failures);
    }
    std::vector<double> pins;
    for (int k = 1;; ++k) {
      const double p = p_lo + k * options.step_mva;
      if (p >= p_hi - 1e-6) break;
      pins.push_back(p);
    }
    const std::size_t m = pins.size();
    // Polygon order: lower envelope left to right, upper envelope right to left.
    slots.resize(2 * m + 4);
    slots[0] = std::move(ends[0]);
    for (std::size_t k = 0; k < m; ++k) {
      slots[1 + k].spec = ObjectiveSpec::boundary(0.0, 1.0, pins[k]);
      slots[1 + k].param = pins[k];
    }
    slots[m + 1] = std::move(ends[1]);
    slots[m + 2] = std::move(ends[2]);
    for (std::size_t k = 0; k < m; ++k) {
      slots[m + 3 + k].spec = ObjectiveSpec::boundary(0.0, -1.0, pins[m - 1 - k]);
      slots[m + 3 + k].param = pins[m - 1 - k];
    }
    slots[2 * m + 3] = std::move(ends[3]);
    tracer.run(slots, 1, m + 1);
    tracer.run(slots, m + 3, 2 * m + 3);
    // A failed pin is retried from the other envelope's solution at the same P.
    parallel_for(m, options.jobs, [&](std::size_t k) {
      Slot& lo = slots[1 + k];
      Slot& hi = slots[2 * m + 2 - k];
      for (auto [a, b] : {std::pair<Slot*, Slot*>{&lo, &hi}, {&hi, &lo}}) {
        if (a->vertex || !b->vertex) continue;
        auto found = tracer.retry(*a, 0, {b});
        if (!found.empty()) *a = std::move(found.front());
      }
    });
    // The extreme-P problems can have several local optima: retry the ends
    // from the outermost vertices of both envelopes and keep every optimum,
    // ordered by Q along the polygon.
    if (m > 0) {
      const std::size_t end_slot[4] = {0, m + 1, m + 2, 2 * m + 3};
      const std::size_t left[2] = {1, 2 * m + 2}, right[2] = {m, m + 3};
      std::vector<std::vector<Slot>> extra(4);
      parallel_for(4, options.jobs, [&](std::size_t k) {
        const std::size_t* seeds = k == 1 || k == 2 ? right : left;
        extra[k] = tracer.retry(slots[end_slot[k]], static_cast<int>(end_slot[k]), {&slots[seeds[0]], &slots[seeds[1]]});
      });
      auto group = [&](std::size_t a, std::size_t b, bool ascending) {
        std::vector<Slot> g;
        for (std::size_t k : {a, b}) {
          g.push_back(std::move(slots[end_slot[k]]));
          for (auto& e : extra[k]) g.push_back(std::move(e));
        }
        const bool any = std::any_of(g.begin(), g.end(), [](const Slot& x) { return x.vertex.has_value(); });
        if (any) std::erase_if(g, [](const Slot& x) { return !x.vertex; });
        std::stable_sort(g.begin(), g.end(), [&](const Slot& x, const Slot& y) {
          if (!x.vertex || !y.vertex) return false;
          return ascending ? x.vertex->point.q < y.vertex->point.q : x.vertex->point.q > y.vertex->point.q;
        });
        return g;
      };
      std::vector<Slot> right_end = group(1, 2, true), left_end = group(3, 0, false);
      std::vector<Slot> ordered;
      for (std::size_t k = 1; k <= m; ++k) ordered.push_back(std::move(slots[k]));
      for (auto& e : right_end) ordered.push_back(std::move(e));
      for (std::size_t k = m + 3; k < 2 * m + 3; ++k) ordered.push_back(std::move(slots[k]));
      for (auto& e : left_end) ordered.push_back(std::move(e));
      slots = std::move(ordered);
    }
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (slots[k].vertex) slots[k].vertex->index = static_cast<int>(k);
      if (slots[k].failure) slots[k].failure->index = static_cast<int>(k);
    }
  }
  assemble(slots, out);
  if (out.vertices.size() < 3) throw BoundaryTraceError(config.label, out.failures);
  return out;
}

double SecureArea::area() const {
  double a = 0.0;
  for (const auto& p : pieces) a += polygon_area(p);
  return a;
}

bool SecureArea::contains(const Point& pt) const {
  for (const auto& p : pieces)
    if (point_in_polygon(pt, p)) return true;
  return false;
}

SecureArea intersect_areas(const std::vector<FlexibilityBoundary>& boundaries) {
  if (boundaries.empty()) throw std::invalid_argument("secure area needs at least one boundary");
  SecureArea out;
  std::vector<Polygon> polys;
  for (const auto& b : boundaries) {
    out.labels.push_back(b.config_label);
    polys.push_back(b.polygon());
  }
  out.pieces = intersect_polygons(polys);
  if (!out.pieces.empty()) out.vertices = out.pieces.front();
  return out;
}

}  // namespace pqflex
