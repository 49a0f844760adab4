#pragma once

#include <optional>
#include <string>

#include "cipm/types.hpp"

namespace cipm {

enum class Status {
  Converged,
  MaxIterations,
  LineSearchFailure,
  SingularSystem,
};

std::string to_string(Status s);

enum class TransportKind { Sequential, Queue };

struct SolverConfig {
  double mu = 10.0;        // barrier multiplier, > 1
  double beta = 0.4;       // backtracking shrink factor, in (0, 1)
  double alpha_ls = 0.1;   // sufficient-decrease slope, in (0, 0.5)
  double epsilon = 1e-3;   // relaxation level used when assembling problems
  double eps_feas = 1e-8;  // residual tolerance for r_dual and r_primal
  double eps_d = 1e-6;     // surrogate-gap tolerance
  int max_iter = 200;

  double min_step = 1e-12;       // line search gives up below this alpha
  bool ridge_fallback = false;   // retry singular local KKT with 1e-10 ridge
  double recv_timeout_sec = 30.0; // queue-transport receive wait

  /// Diagnostic mode: collect full per-iteration iterates through an
  /// extra inspection exchange. Changes the per-iteration round count.
  bool collect_iterates = false;

  std::optional<Vector> x0;      // starting shared point, zero otherwise

  /// Throws InvalidConfigError on any out-of-range field.
  void validate() const;
};

} // namespace cipm
