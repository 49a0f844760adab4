#pragma once

#include <Eigen/LU>

#include "cipm/config.hpp"
#include "cipm/iterate.hpp"
#include "cipm/problem.hpp"

namespace cipm {

/// Blocks of the reduced per-agent Hessian over (y_i, x) after the
/// inequality duals are eliminated:
///
///   H_ll = hess h + sum_j z_j hess G_j + 2 lambda E_xx
///          + DG' diag(-z/G) DG - (4 lambda / s) w_l w_l'
///   H_lg = -2 lambda [I; 0]      - (4 lambda / s) w_l w_g'
///   H_gg =  2 lambda I           - (4 lambda / s) w_g w_g'
///
/// with s = ||x - x_i||^2 - eps^2 < 0, w_l = [x_i - x; 0], w_g = x - x_i,
/// and E_xx the identity on the x_i block. Every term is positive
/// semidefinite for a convex subproblem, so the blocks are too.
struct HessianBlocks {
  Matrix H_ll; // dim x dim
  Matrix H_lg; // dim x p
  Matrix H_gg; // p x p
};

/// Residuals of the perturbed KKT system at one agent.
struct LocalResiduals {
  Vector r_dual_local;  // dim: grad h + DG'z + 2 lambda [x_i - x; 0] + A'v
  Vector r_dual_global; // p: this agent's share of x-stationarity,
                        // 2 lambda (x - x_i)
  Vector r_cent;        // ineq_count: -z .* G - 1/delta
  double r_q = 0.0;     // ball centrality: -lambda * s - 1/delta
  Vector r_primal;      // eq_count: b - A y
};

/// Right-hand side of the reduced system for one agent.
struct LinearTerm {
  Vector r_l; // dim
  Vector r_g; // p
};

/// Solution pieces of the local equality-constrained solve
///   [H_ll A'; A 0] [dy; dv] = [-r_l; r_primal] - [H_lg; 0] dx,
/// affine in dx: dy = u1 + U1 dx, dv = u2 + U2 dx.
struct LocalKktResult {
  Vector u1;  // dim
  Vector u2;  // eq_count
  Matrix U1;  // dim x p
  Matrix U2;  // eq_count x p
  double rcond = 0.0;
  int iteration = -1; // stamp for staleness detection
};

HessianBlocks assemble_local_hessian(const LocalSubproblem& sp,
                                     const Vector& x, const AgentState& st,
                                     double epsilon);

LocalResiduals eval_residuals(const LocalSubproblem& sp, const Vector& x,
                              const AgentState& st, double delta,
                              double epsilon);

/// Folds the centrality residuals into the dual residual:
///   r_l = r_dual_local + DG' (r_cent ./ G) + (2 r_q / s) w_l
///   r_g = r_dual_global            + (2 r_q / s) w_g.
LinearTerm assemble_linear_term(const LocalSubproblem& sp, const Vector& x,
                                const AgentState& st,
                                const LocalResiduals& res, double epsilon);

/// Factors the local KKT matrix once and solves for both the constant and
/// the dx-dependent parts. Throws SingularKktError when the reciprocal
/// condition estimate drops below 1e-14 (after an optional single ridge
/// retry on the H_ll block).
LocalKktResult solve_local_kkt(const HessianBlocks& H, const Matrix& A,
                               const Vector& r_l, const Vector& r_primal,
                               int agent, bool ridge_fallback = false,
                               int iteration = -1);

/// Recovers the eliminated dual directions:
///   dz      = -(z .* (DG dy) - r_cent) ./ G
///   dlambda = (r_q - 2 lambda ((x_i - x)' dx_i + (x - x_i)' dx)) / s.
void dual_directions(const LocalSubproblem& sp, const Vector& x,
                     const AgentState& st, const LocalResiduals& res,
                     double epsilon, const Vector& dy, const Vector& dx,
                     Vector& dz, double& dlambda);

/// min(1, 0.99 * min over negative dual directions of -dual/step).
double dual_step_cap(const AgentState& st, const Vector& dz, double dlambda);

/// Strict feasibility of the advanced point (G < 0 and ball slack < 0).
bool trial_feasible(const LocalSubproblem& sp, const Vector& x,
                    const AgentState& st, const AgentDirection& dir,
                    const Vector& dx, double alpha, double epsilon);

/// One agent's share of the stacked-residual norm at its current state:
/// the global dual block plus sums of squares of the local pieces. The
/// root combines shares as
///   ||r||^2 = ||sum_i global_block_i||^2 + sum_i (sq_dual + sq_cent + sq_primal).
struct ResidualShare {
  Vector global_block; // p
  double sq_dual = 0.0;
  double sq_cent = 0.0; // includes r_q^2
  double sq_primal = 0.0;
};

ResidualShare residual_share(const LocalSubproblem& sp, const Vector& x,
                             const AgentState& st, double delta,
                             double epsilon);

/// In-place update of one agent's slice along its direction.
void advance_state(AgentState& st, const AgentDirection& dir, double alpha);

/// eta_i = -lambda * s - z'G, this agent's share of the surrogate gap.
double surrogate_gap_local(const LocalSubproblem& sp, const Vector& x,
                           const AgentState& st, double epsilon);

/// delta = mu * m_total / eta_hat.
double update_perturbation(double eta_hat, Index m_total, double mu);

bool check_termination(double r_primal_norm, double r_dual_norm,
                       double eta_hat, double eps_feas, double eps_d);

/// Strictly feasible starting iterate: x = x0 (zero by default), every
/// x_i = x, t_i from the family hook, z = 1, v = 0, lambda = 1, and
/// delta = mu * m_total / eta_hat(start). Throws
/// UnsupportedInitializationError when a family cannot produce a strictly
/// feasible auxiliary block.
Iterate initialize(const RelaxedProblem& prob, const SolverConfig& cfg);

} // namespace cipm
