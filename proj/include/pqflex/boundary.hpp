#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pqflex/acropf.hpp"
#include "pqflex/config.hpp"
#include "pqflex/geometry.hpp"
#include "pqflex/ipm.hpp"
#include "pqflex/network.hpp"

namespace pqflex {

enum class SweepMode { AngularSweep, PerimeterStep };
const char* to_string(SweepMode mode);
/// Accepts "angular" / "perimeter"; throws std::invalid_argument otherwise.
SweepMode parse_sweep_mode(const std::string& text);

struct TraceOptions {
  SweepMode mode = SweepMode::PerimeterStep;
  int n_points = 200;     // AngularSweep
  double step_mva = 0.08; // PerimeterStep
  SolverSettings solver;
  int jobs = 1;
  int chunk = 8;          // warm-start chain length
  bool verify = true;
};

struct BoundaryVertex {
  int index = 0;       // solve slot
  double param = 0.0;  // theta (rad) or pinned P (MW); NaN for the perimeter end solves
  Point point;
  SolveStatus status = SolveStatus::Optimal;
  int iterations = 0;
  bool gap_before = false;
  bool verified = false;
  std::vector<std::string> binding;
  ObjectiveSpec spec;
  Vector x;
};

struct TraceFailure {
  int index = 0;
  double param = 0.0;
  SolveStatus status = SolveStatus::NumericFailure;
  std::string message;
};

struct FlexibilityBoundary {
  std::string config_label;
  SweepMode mode = SweepMode::PerimeterStep;
  Point base_point;
  bool degenerate = false;
  std::vector<BoundaryVertex> vertices;  // counterclockwise
  std::vector<TraceFailure> failures;

  Polygon polygon() const;
  double area() const { return polygon_area(polygon()); }
};

class BoundaryTraceError : public std::runtime_error {
 public:
  BoundaryTraceError(std::string label, std::vector<TraceFailure> failures);
  std::string config_label;
  std::vector<TraceFailure> failures;
};

/// Interface (P, Q) with every flexible unit idle, from the oracle power flow.
Point base_point(const NetworkCase& network, const Configuration& config);

/**
 * Traces the P-Q flexibility boundary of one configuration by repeated
 * Objective I solves. Throws BoundaryTraceError when fewer than 3 vertices
 * survive (unless the case has no flexibility at all, which yields the
 * degenerate single-vertex boundary).
 */
FlexibilityBoundary trace_boundary(const NetworkCase& network, const Configuration& config,
                                   const TraceOptions& options = {});

struct SecureArea {
  std::vector<std::string> labels;
  std::vector<Polygon> pieces;  // largest first
  Polygon vertices;             // largest piece, counterclockwise

  double area() const;
  bool empty() const { return pieces.empty(); }
  bool contains(const Point& pt) const;
};

SecureArea intersect_areas(const std::vector<FlexibilityBoundary>& boundaries);

}  // namespace pqflex
