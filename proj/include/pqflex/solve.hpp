#pragma once

#include <optional>

#include "pqflex/acropf.hpp"
#include "pqflex/ipm.hpp"
#include "pqflex/network.hpp"

namespace pqflex {

using QcpSolution = NlpSolution;

/// Applies the [settings] overrides carried by a case file.
SolverSettings settings_for(const NetworkCase& network, SolverSettings base = {});

/**
 * Solves one ACROPF subproblem to local optimality. With settings.multistart
 * = K > 0, K further starts perturb every bus voltage of the flat start by a
 * seeded uniform draw in [-0.05, 0.05] p.u.; the best Optimal result wins.
 */
QcpSolution solve(const QcpProblem& problem, const SolverSettings& settings,
                  const std::optional<Vector>& warm_start = std::nullopt);

/// Optimality measures of a QCP solution.
KktReport kkt_report(const QcpProblem& problem, const QcpSolution& solution);

}  // namespace pqflex
