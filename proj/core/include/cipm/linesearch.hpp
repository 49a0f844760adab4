#pragma once

#include <vector>

#include "cipm/config.hpp"
#include "cipm/kkt.hpp"

namespace cipm {

/// Norms of the stacked KKT residual, with the x-stationarity blocks
/// summed across agents before taking norms.
struct ResidualNorms {
  double total = 0.0;  // dual + centrality + primal
  double dual = 0.0;   // local blocks plus the summed global block
  double primal = 0.0;
};

/// Folds shares in the given (agent-index) order. Both the centralized
/// solver and the root reduce through this, so their arithmetic is
/// identical floating point.
ResidualNorms fold_residual_shares(const std::vector<ResidualShare>& shares);

struct LineSearchResult {
  double alpha = 0.0;
  int trials = 0;
  ResidualNorms before; // at the incoming iterate, at the iterate's delta
  ResidualNorms after;  // at the accepted point, same delta
};

/// Three-phase backtracking: cap alpha at the fraction-to-boundary limit
/// of the dual directions, then shrink by beta until the trial point is
/// strictly feasible and the stacked residual norm satisfies
///   ||r(it + alpha d)|| <= (1 - alpha_ls * alpha) ||r(it)||,
/// everything evaluated at the iterate's current delta. Throws
/// LineSearchError when alpha falls below cfg.min_step.
LineSearchResult line_search(const RelaxedProblem& prob, const Iterate& it,
                             const Direction& dir, const SolverConfig& cfg);

} // namespace cipm
