#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cipm/types.hpp"

namespace cipm {

/// One agent's smooth local problem
///
///   min  h(y)   s.t.  G(y) <= 0 componentwise,  A y = b,
///
/// over the stacked local variable y = (x_i in R^p, t_i in R^extra_dim).
/// Evaluators are plain callables so problem families stay decoupled from
/// the solver; all of them must be safe to call concurrently on distinct
/// inputs (capture data by value).
struct LocalSubproblem {
  std::string family;

  Index p = 0;          // shared-variable dimension
  Index extra_dim = 0;  // dimension of the auxiliary block t_i
  Index ineq_count = 0; // rows of G
  Index eq_count = 0;   // rows of A

  /// h, its gradient and Hessian; arguments have size p + extra_dim.
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;

  /// G(y) in R^ineq_count, its Jacobian (ineq_count x dim), and the
  /// weighted curvature sum_j w_j * hess(G_j) (dim x dim). All three may
  /// be omitted when ineq_count == 0.
  std::function<Vector(const Vector&)> ineq_value;
  std::function<Matrix(const Vector&)> ineq_jacobian;
  std::function<Matrix(const Vector&, const Vector&)> ineq_weighted_hessian;

  Matrix A; // eq_count x dim
  Vector b; // eq_count

  /// Returns a strictly feasible t_i for a given x_i. Required whenever
  /// extra_dim > 0; families without auxiliaries leave it empty.
  std::function<Vector(const Vector&)> initial_extra;

  Index dim() const { return p + extra_dim; }

  /// Throws InvalidInputError / DimensionError when evaluators or the
  /// equality pair are missing or inconsistently sized.
  void check_wellformed() const;
};

/// The coupled problem: N local subproblems tied to a shared x through
/// the relaxation balls ||x - x_i||^2 <= epsilon^2.
struct RelaxedProblem {
  std::vector<LocalSubproblem> agents;
  Index p = 0;
  double epsilon = 0.0;

  Index agent_count() const { return static_cast<Index>(agents.size()); }

  /// N + sum_i ineq_count_i: every ball counts as one inequality.
  Index total_ineq_count() const;
};

/// Validates and bundles subproblems into a RelaxedProblem.
/// Throws InvalidInputError (epsilon <= 0, empty list) or DimensionError
/// (mismatched p across agents).
RelaxedProblem assemble_relaxed_problem(std::vector<LocalSubproblem> agents,
                                        double epsilon);

} // namespace cipm
