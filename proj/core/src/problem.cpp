#include "cipm/problem.hpp"

#include <utility>

#include "cipm/errors.hpp"

namespace cipm {

void LocalSubproblem::check_wellformed() const {
  if (p <= 0) throw InvalidInputError("subproblem: p must be positive");
  if (extra_dim < 0 || ineq_count < 0 || eq_count < 0)
    throw InvalidInputError("subproblem: negative dimension");
  if (!value || !gradient || !hessian)
    throw InvalidInputError("subproblem '" + family +
                            "': objective evaluators missing");
  if (ineq_count > 0 &&
      (!ineq_value || !ineq_jacobian || !ineq_weighted_hessian))
    throw InvalidInputError("subproblem '" + family +
                            "': inequality evaluators missing");
  if (eq_count > 0) {
    if (A.rows() != eq_count || A.cols() != dim())
      throw DimensionError("subproblem '" + family + "': A must be " +
                           std::to_string(eq_count) + "x" +
                           std::to_string(dim()));
    if (b.size() != eq_count)
      throw DimensionError("subproblem '" + family + "': b must have " +
                           std::to_string(eq_count) + " entries");
  }
  if (extra_dim > 0 && !initial_extra)
    throw InvalidInputError("subproblem '" + family +
                            "': initial_extra required when extra_dim > 0");
}

Index RelaxedProblem::total_ineq_count() const {
  Index total = agent_count();
  for (const auto& a : agents) total += a.ineq_count;
  return total;
}

RelaxedProblem assemble_relaxed_problem(std::vector<LocalSubproblem> agents,
                                        double epsilon) {
  if (agents.empty())
    throw InvalidInputError("assemble_relaxed_problem: no subproblems");
  if (!(epsilon > 0.0))
    throw InvalidInputError("assemble_relaxed_problem: epsilon must be > 0");
  const Index p = agents.front().p;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    agents[i].check_wellformed();
    if (agents[i].p != p)
      throw DimensionError("assemble_relaxed_problem: agent " +
                           std::to_string(i) + " has p=" +
                           std::to_string(agents[i].p) + ", expected " +
                           std::to_string(p));
  }
  RelaxedProblem prob;
  prob.agents = std::move(agents);
  prob.p = p;
  prob.epsilon = epsilon;
  return prob;
}

} // namespace cipm
