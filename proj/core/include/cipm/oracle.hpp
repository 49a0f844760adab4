#pragma once

#include <vector>

#include "cipm/driver.hpp"
#include "cipm/families.hpp"

namespace cipm {

/// The complete Newton system over ((y_i, v_i))_i and x with the
/// inequality and ball duals folded into the blocks: symmetric, and
/// arrow-shaped (per-agent diagonal blocks plus one shared column/row).
/// Assembled in one piece from the subproblem evaluators, independently
/// of the per-agent elimination path.
struct DenseSystem {
  Matrix K;
  Vector rhs;
  std::vector<Index> agent_offset; // start of each agent's (y, v) block
  Index x_offset = 0;
};

DenseSystem assemble_dense_system(const RelaxedProblem& prob,
                                  const Iterate& it);

/// Newton direction from one dense factorization of the stacked system,
/// with the eliminated inequality and ball dual directions recovered
/// afterwards. This is the comparison baseline for the message-passing
/// direction. Rows of a working copy are max-abs equilibrated before the
/// factorization. Throws OracleFailureError when the stacked matrix is
/// numerically singular.
Direction dense_kkt_direction(const RelaxedProblem& prob, const Iterate& it);

/// The same iteration policy as solve_distributed, run sequentially in
/// one address space with directions from dense_kkt_direction. Step-size
/// policy, residual folds, and termination scalars are shared code, so
/// traces are comparable row by row against the message-passing engine.
SolveResult solve_centralized(const RelaxedProblem& prob,
                              const SolverConfig& cfg);

/// Minimizer of sum_i (0.5 x'P_i x + q_i'x). Throws OracleFailureError
/// when the summed matrix is singular.
Vector quadratic_optimum(const std::vector<QuadraticData>& parts);

/// Minimizer of the pooled ridge logistic loss, by damped Newton to
/// ||grad|| <= grad_tol. Throws OracleFailureError on stall or
/// non-convergence within 500 steps.
Vector logistic_optimum(const std::vector<LogisticData>& parts,
                        double grad_tol = 1e-10);

/// Minimizer of the pooled clipped-quadratic regression cost. All rows
/// are stacked into a single agent, which makes the relaxation exact:
/// the shared point is coupled to one local block only and tracks its
/// minimizer to solver accuracy. Parts must share the clipping
/// threshold. Throws OracleFailureError when the solve does not
/// converge.
Vector huber_optimum(const std::vector<HuberData>& parts);

/// x* of the unrelaxed averaged problem for a uniform-family agent list;
/// dispatches to the closed form, the damped Newton, or the pooled
/// solve above. Agents with equality pairs or mixed families are not
/// supported here.
Vector unrelaxed_optimum(const std::vector<FamilyInstance>& agents);

/// (1/N) sum_i F_i(x) over consensus-view objectives.
double averaged_objective(const std::vector<ConsensusObjective>& objectives,
                          const Vector& x);

} // namespace cipm
