#pragma once

#include <vector>

#include "cipm/problem.hpp"
#include "cipm/types.hpp"

namespace cipm {

/// One agent's primal-dual state. z and lambda must stay strictly
/// positive, and (x_i, t_i) strictly feasible, at every accepted iterate.
struct AgentState {
  Vector x_i;      // p
  Vector t_i;      // extra_dim
  Vector z;        // ineq_count, > 0
  Vector v;        // eq_count
  double lambda = 1.0;

  Vector stacked() const {
    Vector y(x_i.size() + t_i.size());
    y << x_i, t_i;
    return y;
  }
};

/// Global view of the solver state. The distributed engine never
/// materializes one of these outside diagnostics; each leaf holds only
/// its own slice.
struct Iterate {
  Vector x;
  std::vector<AgentState> agents;
  double delta = 1.0;   // barrier perturbation in use
  int iteration = 0;

  /// Ball slack ||x - x_i||^2 - epsilon^2 for one agent; negative when
  /// strictly feasible.
  double ball_slack(Index i, double epsilon) const {
    return (x - agents[i].x_i).squaredNorm() - epsilon * epsilon;
  }
};

/// Directions matching the Iterate layout.
struct AgentDirection {
  Vector dx_i;
  Vector dt_i;
  Vector dz;
  Vector dv;
  double dlambda = 0.0;

  Vector stacked() const {
    Vector d(dx_i.size() + dt_i.size());
    d << dx_i, dt_i;
    return d;
  }
};

struct Direction {
  Vector dx;
  std::vector<AgentDirection> agents;
};

/// True when every G is strictly negative, every ball slack is strictly
/// negative, and all inequality duals are strictly positive.
bool strictly_feasible(const RelaxedProblem& prob, const Iterate& it);

} // namespace cipm
