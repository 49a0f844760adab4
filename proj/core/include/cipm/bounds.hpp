#pragma once

#include <optional>

#include "cipm/types.hpp"

namespace cipm {

/// Per-agent Lipschitz constants of the consensus costs plus the
/// relaxation level. `modulus` is the strong-convexity modulus of the
/// averaged cost (1/N) sum_i F_i, when known.
struct BoundInputs {
  Vector lipschitz;                      // L_i > 0, one per agent
  double epsilon = 0.0;                  // >= 0
  std::optional<double> modulus;

  Index agent_count() const { return lipschitz.size(); }
};

/// Guaranteed cap on (1/N) sum_i [F_i(x_rel) - F_i(x_star)]:
/// epsilon * (sum_i L_i) / N.
double suboptimality_bound(const BoundInputs& in);

/// Guaranteed cap on ||x_rel - x_star||^2 when the averaged cost is
/// strongly convex: 2 * epsilon * (sum_i L_i) / (N * modulus).
double distance_bound(const BoundInputs& in);

/// Largest epsilon whose suboptimality bound stays within `tolerance`:
/// N * tolerance / L_total.
double epsilon_for_tolerance(double lipschitz_total, Index agent_count,
                             double tolerance);

} // namespace cipm
