#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pqflex/boundary.hpp"
#include "pqflex/dispatch.hpp"
#include "pqflex/oracle.hpp"

namespace pqflex {

inline constexpr const char* kToolVersion = "1.0.0";

/// 17 significant digits; "nan" / "inf" for non-finite values.
std::string format_number(double v);
/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(const std::string& bytes);
/// Label made safe for use in a file name.
std::string file_stem(const std::string& label);

/// One stored operating point, enough to re-run the oracle on it.
struct SetpointRecord {
  std::string source;  // "boundary" or "surface"
  std::string config_label;
  int index = 0;
  Point point;  // interface P/Q claimed by the optimizer
  InterfacePin pin;
  Setpoints setpoints;
};

std::vector<SetpointRecord> boundary_records(const NetworkCase& network, const Configuration& config,
                                             const FlexibilityBoundary& boundary);
std::vector<SetpointRecord> surface_records(const NetworkCase& network, const Configuration& config,
                                            const CostSurface& surface);

std::string setpoints_csv(const NetworkCase& network, const std::vector<SetpointRecord>& records);
/// Inverse of setpoints_csv. Throws std::runtime_error on malformed input.
std::vector<SetpointRecord> parse_setpoints_csv(const NetworkCase& network, const std::string& text);

std::string boundary_csv(const FlexibilityBoundary& boundary);
std::string surface_csv(const NetworkCase& network, const CostSurface& surface);
std::string secure_csv(const SecureArea& area);

nlohmann::json boundary_json(const FlexibilityBoundary& boundary, const Configuration& config);
nlohmann::json surface_json(const CostSurface& surface);
nlohmann::json comparison_json(const SurfaceComparison& cmp);
nlohmann::json secure_json(const SecureArea& area, const std::vector<std::string>& empty_labels);
nlohmann::json verification_json(const VerificationReport& report);

struct SvgOptions {
  std::optional<std::string> timestamp;  // embedded as metadata when set
};

/// Boundary polygons, their base points and (optionally) the secure area in green.
std::string overlay_svg(const std::vector<FlexibilityBoundary>& boundaries, const SecureArea* secure,
                        const SvgOptions& opt = {});
/// Net active regulation of unit `unit` over the grid: red consumes, blue produces, white infeasible.
std::string unit_map_svg(const NetworkCase& network, const CostSurface& surface, std::size_t unit,
                         const SvgOptions& opt = {});
std::string cost_surface_svg(const CostSurface& surface, const SvgOptions& opt = {});
/// Both surfaces on a shared colour scale plus their difference.
std::string comparison_svg(const CostSurface& a, const CostSurface& b, const SurfaceComparison& cmp,
                           const SvgOptions& opt = {});

/**
 * Append-only run directory. Files are written immediately and recorded with
 * their SHA-256; finish() writes manifest.json listing all of them.
 */
class RunDirectory {
 public:
  /// Throws std::runtime_error if `dir` already holds a manifest.
  explicit RunDirectory(std::filesystem::path dir);

  void write(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const nlohmann::json& doc);
  void finish(nlohmann::json manifest);

  const std::filesystem::path& path() const { return dir_; }

 private:
  std::filesystem::path dir_;
  nlohmann::json outputs_ = nlohmann::json::array();
};

std::string read_file(const std::filesystem::path& path);

}  // namespace pqflex
