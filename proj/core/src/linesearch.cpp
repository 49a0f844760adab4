#include "cipm/linesearch.hpp"

#include <cmath>

#include "cipm/errors.hpp"

namespace cipm {

ResidualNorms fold_residual_shares(const std::vector<ResidualShare>& shares) {
  Vector global = Vector::Zero(shares.empty() ? 0 : shares[0].global_block.size());
  double sq_dual = 0.0, sq_cent = 0.0, sq_primal = 0.0;
  for (const ResidualShare& s : shares) {
    global += s.global_block;
    sq_dual += s.sq_dual;
    sq_cent += s.sq_cent;
    sq_primal += s.sq_primal;
  }
  const double g2 = global.squaredNorm();
  ResidualNorms n;
  n.dual = std::sqrt(g2 + sq_dual);
  n.primal = std::sqrt(sq_primal);
  n.total = std::sqrt(g2 + sq_dual + sq_cent + sq_primal);
  return n;
}

LineSearchResult line_search(const RelaxedProblem& prob, const Iterate& it,
                             const Direction& dir, const SolverConfig& cfg) {
  const Index n_agents = prob.agent_count();

  double alpha = 1.0;
  for (Index i = 0; i < n_agents; ++i) {
    const auto& st = it.agents[static_cast<std::size_t>(i)];
    const auto& d = dir.agents[static_cast<std::size_t>(i)];
    alpha = std::min(alpha, dual_step_cap(st, d.dz, d.dlambda));
  }

  std::vector<ResidualShare> shares(static_cast<std::size_t>(n_agents));
  for (Index i = 0; i < n_agents; ++i)
    shares[static_cast<std::size_t>(i)] = residual_share(
        prob.agents[static_cast<std::size_t>(i)], it.x,
        it.agents[static_cast<std::size_t>(i)], it.delta, prob.epsilon);
  const ResidualNorms before = fold_residual_shares(shares);

  LineSearchResult out;
  out.before = before;
  double last_trial = before.total;
  while (true) {
    ++out.trials;
    bool feasible = true;
    for (Index i = 0; i < n_agents && feasible; ++i)
      feasible = trial_feasible(prob.agents[static_cast<std::size_t>(i)],
                                it.x, it.agents[static_cast<std::size_t>(i)],
                                dir.agents[static_cast<std::size_t>(i)],
                                dir.dx, alpha, prob.epsilon);
    if (feasible) {
      const Vector x_trial = it.x + alpha * dir.dx;
      for (Index i = 0; i < n_agents; ++i) {
        AgentState st = it.agents[static_cast<std::size_t>(i)];
        advance_state(st, dir.agents[static_cast<std::size_t>(i)], alpha);
        shares[static_cast<std::size_t>(i)] = residual_share(
            prob.agents[static_cast<std::size_t>(i)], x_trial, st, it.delta,
            prob.epsilon);
      }
      const ResidualNorms trial = fold_residual_shares(shares);
      last_trial = trial.total;
      if (trial.total <= (1.0 - cfg.alpha_ls * alpha) * before.total) {
        out.alpha = alpha;
        out.after = trial;
        return out;
      }
    }
    alpha *= cfg.beta;
    if (alpha < cfg.min_step)
      throw LineSearchError(
          "line search stalled below alpha = " + std::to_string(cfg.min_step),
          before.total, last_trial);
  }
}

} // namespace cipm
