#pragma once

#include <optional>

#include "cipm/problem.hpp"
#include "cipm/types.hpp"

namespace cipm {

/// log(1 + exp(z)) without overflow or catastrophic cancellation.
double log1pexp(double z);

/// 1 / (1 + exp(-z)), stable for large |z|.
double sigmoid(double z);

/// The clipped-quadratic penalty: u^2 inside [-M, M], M(2|u| - M) outside.
/// Throws InvalidInputError when M <= 0.
double huber_value(double u, double half_width);

/// Consensus-cost view of one agent: F_i as a function of the shared x.
/// For epigraph families this is the value after minimizing out the
/// auxiliaries, i.e. the original nonsmooth cost.
struct ConsensusObjective {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

/// Robust least squares with per-row penalty huber_value(A x - y).
/// The subproblem introduces t = (u, v) with h = ||u||^2 + 2M 1'v and the
/// row blocks, in fixed order,
///   (a)  A x - y - u - v <= 0
///   (b) -A x + y - u - v <= 0
///   (c) -u <= 0
///   (d)  u - M <= 0
///   (e) -v <= 0,
/// so extra_dim = 2n and ineq_count = 5n. Minimizing over (u, v) at fixed
/// x recovers the penalty exactly on both branches.
struct HuberData {
  Matrix A;       // n x p
  Vector y;       // n
  double half_width = 1.0;

  LocalSubproblem make_subproblem() const;
  ConsensusObjective make_objective() const;
};

/// Binary logistic regression with ridge term. The negated log-likelihood
///   sum_j [ log(1 + exp(phi_j' x)) - y_j phi_j' x ] + (rho / N) ||x||^2
/// is smooth, so the subproblem has no auxiliaries and no constraints.
/// `agent_count` is the N that splits the shared regularizer.
struct LogisticData {
  Matrix phi;     // n x p
  Vector y;       // n, entries in {0, 1}
  double rho = 1.0;
  Index agent_count = 1;

  LocalSubproblem make_subproblem() const;
  ConsensusObjective make_objective() const;
};

/// Plain convex quadratic 0.5 x'Px + q'x. P must be symmetric.
struct QuadraticData {
  Matrix P;       // p x p, symmetric
  Vector q;       // p

  LocalSubproblem make_subproblem() const;
  ConsensusObjective make_objective() const;
};

/// One agent as named in problem-spec files: a family tag ("quadratic",
/// "huber-rls", "logreg") with its typed parameters, plus an optional
/// equality pair A y = b over the agent's stacked variable. Exactly one
/// data member may be engaged and it must match the tag.
struct FamilyInstance {
  std::string family;
  std::optional<QuadraticData> quadratic;
  std::optional<HuberData> huber;
  std::optional<LogisticData> logistic;
  Matrix A; // zero rows when the agent has no equalities
  Vector b;

  Index p() const;

  /// Throws InvalidInputError on tag/data mismatch and DimensionError
  /// when the equality pair does not span the stacked variable.
  LocalSubproblem make_subproblem() const;
  ConsensusObjective make_objective() const;
};

} // namespace cipm
