#include "pqflex/solve.hpp"

#include <random>

namespace pqflex {

SolverSettings settings_for(const NetworkCase& network, SolverSettings base) {
  if (network.settings.tol) base.tol_kkt = *network.settings.tol;
  if (network.settings.max_iter) base.max_iter = *network.settings.max_iter;
  if (network.settings.multistart) base.multistart = *network.settings.multistart;
  return base;
}

QcpSolution solve(const QcpProblem& problem, const SolverSettings& settings, const std::optional<Vector>& warm_start) {
  QcpSolution best = solve_nlp(problem, settings, warm_start);
  if (settings.multistart <= 0) return best;

  std::mt19937_64 rng(settings.seed);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  const auto& L = problem.layout;
  for (int k = 0; k < settings.multistart; ++k) {
    Vector start = problem.initial_point();
    for (int b = 0; b < L.n_bus; ++b) {
      start[L.e(b)] += jitter(rng);
      start[L.f(b)] += jitter(rng);
    }
    QcpSolution trial = solve_nlp(problem, settings, start);
    const bool better = trial.status == SolveStatus::Optimal &&
                        (best.status != SolveStatus::Optimal || trial.objective < best.objective);
    trial.iterations += best.iterations;
    if (better) {
      best = std::move(trial);
    } else {
      best.iterations = trial.iterations;
    }
  }
  return best;
}

KktReport kkt_report(const QcpProblem& problem, const QcpSolution& solution) {
  return kkt_report(static_cast<const NlpProblem&>(problem), solution);
}

}  // namespace pqflex
