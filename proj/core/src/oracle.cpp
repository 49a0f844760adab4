#include "cipm/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/LU>

#include "cipm/errors.hpp"
#include "cipm/kkt.hpp"
#include "cipm/linesearch.hpp"

namespace cipm {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kMinRcond = 1e-14;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

} // namespace

DenseSystem assemble_dense_system(const RelaxedProblem& prob,
                                  const Iterate& it) {
  const Index n_agents = prob.agent_count();
  const Index p = prob.p;
  if (it.x.size() != p ||
      static_cast<Index>(it.agents.size()) != n_agents)
    throw DimensionError("iterate does not match the problem layout");
  if (it.delta <= 0.0)
    throw InvalidInputError("iterate carries a non-positive perturbation");

  DenseSystem sys;
  sys.agent_offset.resize(static_cast<std::size_t>(n_agents));
  Index off = 0;
  for (Index i = 0; i < n_agents; ++i) {
    sys.agent_offset[static_cast<std::size_t>(i)] = off;
    off += prob.agents[static_cast<std::size_t>(i)].dim() +
           prob.agents[static_cast<std::size_t>(i)].eq_count;
  }
  sys.x_offset = off;
  const Index total = off + p;
  sys.K = Matrix::Zero(total, total);
  sys.rhs = Vector::Zero(total);
  const double inv_delta = 1.0 / it.delta;

  for (Index i = 0; i < n_agents; ++i) {
    const LocalSubproblem& sp = prob.agents[static_cast<std::size_t>(i)];
    const AgentState& st = it.agents[static_cast<std::size_t>(i)];
    const Index o = sys.agent_offset[static_cast<std::size_t>(i)];
    const Index d = sp.dim();
    const Index u = sp.eq_count;

    const Vector y = st.stacked();
    const double s = it.ball_slack(i, prob.epsilon);
    const Vector w_g = it.x - st.x_i;
    Vector w_l = Vector::Zero(d);
    w_l.head(p) = st.x_i - it.x;
    const double lam = st.lambda;

    Matrix H_ll = sp.hessian(y);
    H_ll.topLeftCorner(p, p) += 2.0 * lam * Matrix::Identity(p, p);
    H_ll -= (4.0 * lam / s) * w_l * w_l.transpose();
    Vector r_l = sp.gradient(y) + 2.0 * lam * w_l;
    const double r_q = -lam * s - inv_delta;
    r_l += (2.0 * r_q / s) * w_l;

    if (sp.ineq_count > 0) {
      const Vector g = sp.ineq_value(y);
      const Matrix DG = sp.ineq_jacobian(y);
      H_ll += sp.ineq_weighted_hessian(y, st.z);
      H_ll += DG.transpose() *
              st.z.cwiseQuotient(-g).asDiagonal() * DG;
      const Vector r_cent = (-st.z.cwiseProduct(g)).array() - inv_delta;
      r_l += DG.transpose() * st.z;
      r_l += DG.transpose() * r_cent.cwiseQuotient(g);
    }

    Matrix H_lg = Matrix::Zero(d, p);
    H_lg.topRows(p) = -2.0 * lam * Matrix::Identity(p, p);
    H_lg -= (4.0 * lam / s) * w_l * w_g.transpose();
    const Matrix H_gg =
        2.0 * lam * Matrix::Identity(p, p) -
        (4.0 * lam / s) * w_g * w_g.transpose();
    const Vector r_g = 2.0 * lam * w_g + (2.0 * r_q / s) * w_g;

    sys.K.block(o, o, d, d) = H_ll;
    sys.K.block(o, sys.x_offset, d, p) = H_lg;
    sys.K.block(sys.x_offset, o, p, d) = H_lg.transpose();
    if (u > 0) {
      r_l += sp.A.transpose() * st.v;
      sys.K.block(o, o + d, d, u) = sp.A.transpose();
      sys.K.block(o + d, o, u, d) = sp.A;
      sys.rhs.segment(o + d, u) = sp.b - sp.A * y;
    }
    sys.K.block(sys.x_offset, sys.x_offset, p, p) += H_gg;
    sys.rhs.segment(o, d) = -r_l;
    sys.rhs.segment(sys.x_offset, p) -= r_g;
  }
  return sys;
}

Direction dense_kkt_direction(const RelaxedProblem& prob, const Iterate& it) {
  const DenseSystem sys = assemble_dense_system(prob, it);
  const Index p = prob.p;
  const Index total = sys.K.rows();

  Matrix W = sys.K;
  Vector r = sys.rhs;
  for (Index row = 0; row < total; ++row) {
    const double scale = W.row(row).cwiseAbs().maxCoeff();
    if (scale > 0.0) {
      W.row(row) /= scale;
      r(row) /= scale;
    }
  }
  Eigen::PartialPivLU<Matrix> lu(W);
  // The 1-norm rcond estimate is unreliable here in both directions: it
  // can miss an exact null direction (duplicated equality rows survive
  // row scaling untouched) and it can condemn solvable systems whose
  // barrier terms are merely stiff. After equilibration every row has
  // unit scale, so a collapsed pivot ratio means rank deficiency rather
  // than bad scaling; solve quality is then judged by the refined
  // backward error instead of an estimate.
  const Vector pivots = lu.matrixLU().diagonal().cwiseAbs();
  if (!(pivots.minCoeff() > kMinRcond * pivots.maxCoeff()))
    throw OracleFailureError(
        "stacked direction system is numerically singular");
  Vector sol = lu.solve(r);
  sol += lu.solve(r - W * sol);
  const double backward =
      (W * sol - r).norm() / std::max(1.0, sol.norm());
  if (!(backward <= 1e-8))
    throw OracleFailureError(
        "stacked direction system is numerically singular");

  Direction dir;
  dir.dx = sol.segment(sys.x_offset, p);
  dir.agents.resize(static_cast<std::size_t>(prob.agent_count()));
  const double inv_delta = 1.0 / it.delta;
  for (Index i = 0; i < prob.agent_count(); ++i) {
    const LocalSubproblem& sp = prob.agents[static_cast<std::size_t>(i)];
    const AgentState& st = it.agents[static_cast<std::size_t>(i)];
    const Index o = sys.agent_offset[static_cast<std::size_t>(i)];
    const Index d = sp.dim();
    AgentDirection& ad = dir.agents[static_cast<std::size_t>(i)];
    const Vector dy = sol.segment(o, d);
    ad.dx_i = dy.head(p);
    ad.dt_i = dy.tail(sp.extra_dim);
    ad.dv = sol.segment(o + d, sp.eq_count);

    if (sp.ineq_count > 0) {
      const Vector y = st.stacked();
      const Vector g = sp.ineq_value(y);
      const Matrix DG = sp.ineq_jacobian(y);
      const Vector r_cent = (-st.z.cwiseProduct(g)).array() - inv_delta;
      ad.dz = (r_cent - st.z.cwiseProduct(DG * dy)).cwiseQuotient(g);
    } else {
      ad.dz.resize(0);
    }

    const double s = it.ball_slack(i, prob.epsilon);
    const double r_q = -st.lambda * s - inv_delta;
    const double coupling = (st.x_i - it.x).dot(ad.dx_i) +
                            (it.x - st.x_i).dot(dir.dx);
    ad.dlambda = (r_q - 2.0 * st.lambda * coupling) / s;
  }
  return dir;
}

SolveResult solve_centralized(const RelaxedProblem& prob,
                              const SolverConfig& cfg) {
  const auto t_start = Clock::now();
  const Index n_agents = prob.agent_count();
  const Index m_total = prob.total_ineq_count();

  Iterate it = initialize(prob, cfg);
  Status status = Status::MaxIterations;
  Trace trace;

  try {
    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
      const auto t_iter = Clock::now();
      it.iteration = iter;
      if (cfg.collect_iterates) trace.iterates.push_back(it);

      const Direction dir = dense_kkt_direction(prob, it);
      const LineSearchResult ls = line_search(prob, it, dir, cfg);

      for (Index i = 0; i < n_agents; ++i)
        advance_state(it.agents[static_cast<std::size_t>(i)],
                      dir.agents[static_cast<std::size_t>(i)], ls.alpha);
      it.x += ls.alpha * dir.dx;

      double eta = 0.0;
      for (Index i = 0; i < n_agents; ++i)
        eta += surrogate_gap_local(prob.agents[static_cast<std::size_t>(i)],
                                   it.x,
                                   it.agents[static_cast<std::size_t>(i)],
                                   prob.epsilon);
      const double delta_next = update_perturbation(eta, m_total, cfg.mu);

      IterationRecord row;
      row.iter = iter;
      row.eta_hat = eta;
      row.r_dual_norm = ls.after.dual;
      row.r_primal_norm = ls.after.primal;
      row.alpha = ls.alpha;
      row.delta = it.delta;
      row.trials = ls.trials;
      row.exchanges = 0;
      row.wall_sec = seconds_since(t_iter);
      row.residual_before = ls.before.total;
      row.residual_after = ls.after.total;
      row.x = it.x;
      trace.rows.push_back(std::move(row));

      const bool stop = check_termination(ls.after.primal, ls.after.dual,
                                          eta, cfg.eps_feas, cfg.eps_d);
      it.delta = delta_next;
      if (stop) {
        status = Status::Converged;
        break;
      }
    }
  } catch (const LineSearchError&) {
    status = Status::LineSearchFailure;
  } catch (const SingularKktError&) {
    status = Status::SingularSystem;
  } catch (const SingularRootError&) {
    status = Status::SingularSystem;
  } catch (const OracleFailureError&) {
    status = Status::SingularSystem;
  }

  if (cfg.collect_iterates) {
    it.iteration = static_cast<int>(trace.rows.size()) + 1;
    trace.iterates.push_back(it);
  }

  SolveResult out;
  out.solution.x = it.x;
  out.solution.status = status;
  out.solution.iterations = static_cast<int>(trace.rows.size());
  out.solution.x_agents.assign(static_cast<std::size_t>(n_agents), it.x);
  out.solution.agent_objectives.resize(static_cast<std::size_t>(n_agents));
  double sum = 0.0;
  for (Index i = 0; i < n_agents; ++i) {
    const auto& st = it.agents[static_cast<std::size_t>(i)];
    const double h =
        prob.agents[static_cast<std::size_t>(i)].value(st.stacked());
    out.solution.agent_objectives[static_cast<std::size_t>(i)] = h;
    sum += h;
  }
  out.solution.objective_sum = sum;
  out.solution.objective_avg = sum / static_cast<double>(n_agents);

  trace.status = status;
  trace.wall_sec = seconds_since(t_start);
  out.trace = std::move(trace);
  return out;
}

Vector quadratic_optimum(const std::vector<QuadraticData>& parts) {
  if (parts.empty())
    throw InvalidInputError("quadratic_optimum needs at least one part");
  const Index p = parts.front().P.rows();
  Matrix P = Matrix::Zero(p, p);
  Vector q = Vector::Zero(p);
  for (const QuadraticData& part : parts) {
    if (part.P.rows() != p || part.q.size() != p)
      throw DimensionError("quadratic parts disagree on dimension");
    P += part.P;
    q += part.q;
  }
  Eigen::PartialPivLU<Matrix> lu(P);
  if (!(lu.rcond() >= kMinRcond))
    throw OracleFailureError("summed quadratic is singular");
  return lu.solve(-q);
}

namespace {

/// Damped Newton on a smooth convex objective with caller-supplied
/// derivatives.
Vector damped_newton(Index p, const std::function<double(const Vector&)>& f,
                     const std::function<Vector(const Vector&)>& grad,
                     const std::function<Matrix(const Vector&)>& hess,
                     double grad_tol, const char* label) {
  Vector x = Vector::Zero(p);
  double fx = f(x);
  for (int iter = 0; iter < 500; ++iter) {
    const Vector g = grad(x);
    if (g.norm() <= grad_tol) return x;
    Eigen::PartialPivLU<Matrix> lu(hess(x));
    if (!(lu.rcond() >= kMinRcond))
      throw OracleFailureError(std::string(label) +
                               ": curvature matrix is singular");
    const Vector step = lu.solve(-g);
    const double slope = g.dot(step);
    double alpha = 1.0;
    while (true) {
      const Vector trial = x + alpha * step;
      const double ft = f(trial);
      if (ft <= fx + 1e-4 * alpha * slope) {
        x = trial;
        fx = ft;
        break;
      }
      alpha *= 0.5;
      if (alpha < 1e-14)
        throw OracleFailureError(std::string(label) +
                                 ": backtracking stalled");
    }
  }
  throw OracleFailureError(std::string(label) +
                           ": no convergence within 500 steps");
}

} // namespace

Vector logistic_optimum(const std::vector<LogisticData>& parts,
                        double grad_tol) {
  if (parts.empty())
    throw InvalidInputError("logistic_optimum needs at least one part");
  const Index p = parts.front().phi.cols();
  for (const LogisticData& part : parts)
    if (part.phi.cols() != p || part.y.size() != part.phi.rows() ||
        part.agent_count <= 0)
      throw DimensionError("logistic parts disagree on dimension");

  auto f = [&parts](const Vector& x) {
    double total = 0.0;
    for (const LogisticData& part : parts) {
      const Vector z = part.phi * x;
      for (Index j = 0; j < z.size(); ++j)
        total += log1pexp(z[j]) - part.y[j] * z[j];
      total += part.rho / static_cast<double>(part.agent_count) *
               x.squaredNorm();
    }
    return total;
  };
  auto grad = [&parts, p](const Vector& x) {
    Vector g = Vector::Zero(p);
    for (const LogisticData& part : parts) {
      const Vector z = part.phi * x;
      Vector sig(z.size());
      for (Index j = 0; j < z.size(); ++j) sig[j] = sigmoid(z[j]);
      g += part.phi.transpose() * (sig - part.y);
      g += 2.0 * part.rho / static_cast<double>(part.agent_count) * x;
    }
    return g;
  };
  auto hess = [&parts, p](const Vector& x) {
    Matrix H = Matrix::Zero(p, p);
    for (const LogisticData& part : parts) {
      const Vector z = part.phi * x;
      Vector w(z.size());
      for (Index j = 0; j < z.size(); ++j) {
        const double s = sigmoid(z[j]);
        w[j] = s * (1.0 - s);
      }
      H += part.phi.transpose() * w.asDiagonal() * part.phi;
      H += 2.0 * part.rho / static_cast<double>(part.agent_count) *
           Matrix::Identity(p, p);
    }
    return H;
  };
  return damped_newton(p, f, grad, hess, grad_tol, "logistic optimum");
}

Vector huber_optimum(const std::vector<HuberData>& parts) {
  if (parts.empty())
    throw InvalidInputError("huber_optimum needs at least one part");
  const Index p = parts.front().A.cols();
  const double half_width = parts.front().half_width;
  Index rows = 0;
  for (const HuberData& part : parts) {
    if (part.A.cols() != p)
      throw DimensionError("regression parts disagree on dimension");
    if (part.half_width != half_width)
      throw InvalidInputError(
          "pooled reference needs a shared clipping threshold");
    rows += part.A.rows();
  }

  // Pooling every row into one agent makes the relaxation exact: the
  // shared point is coupled to a single local block, so it tracks that
  // block's minimizer regardless of the ball radius, and the mild radius
  // keeps the stacked system well conditioned.
  HuberData pooled;
  pooled.A.resize(rows, p);
  pooled.y.resize(rows);
  pooled.half_width = half_width;
  Index at = 0;
  for (const HuberData& part : parts) {
    pooled.A.middleRows(at, part.A.rows()) = part.A;
    pooled.y.segment(at, part.A.rows()) = part.y;
    at += part.A.rows();
  }

  std::vector<LocalSubproblem> agents;
  agents.push_back(pooled.make_subproblem());
  const RelaxedProblem prob =
      assemble_relaxed_problem(std::move(agents), 1e-3);

  SolverConfig cfg;
  cfg.epsilon = 1e-3;
  // On large pooled systems the surrogate gap floors near 5e-9 once the
  // perturbation parameter passes 1e12, so a tighter gap target than
  // this stalls the backtracking search instead of refining x.
  cfg.eps_d = 1e-7;
  cfg.max_iter = 400;
  const SolveResult res = solve_centralized(prob, cfg);
  if (res.solution.status != Status::Converged)
    throw OracleFailureError("pooled reference solve ended with status " +
                             to_string(res.solution.status));
  return res.solution.x;
}

Vector unrelaxed_optimum(const std::vector<FamilyInstance>& agents) {
  if (agents.empty())
    throw InvalidInputError("unrelaxed_optimum needs at least one agent");
  const std::string& family = agents.front().family;
  for (const FamilyInstance& fi : agents) {
    if (fi.family != family)
      throw InvalidInputError(
          "unrelaxed_optimum requires a uniform family list");
    if (fi.A.rows() > 0)
      throw InvalidInputError(
          "equality-constrained agents have no unrelaxed reference");
  }
  if (family == "quadratic") {
    std::vector<QuadraticData> parts;
    for (const FamilyInstance& fi : agents) parts.push_back(*fi.quadratic);
    return quadratic_optimum(parts);
  }
  if (family == "huber-rls") {
    std::vector<HuberData> parts;
    for (const FamilyInstance& fi : agents) parts.push_back(*fi.huber);
    return huber_optimum(parts);
  }
  if (family == "logreg") {
    std::vector<LogisticData> parts;
    for (const FamilyInstance& fi : agents) parts.push_back(*fi.logistic);
    return logistic_optimum(parts);
  }
  throw InvalidInputError("unknown family '" + family + "'");
}

double averaged_objective(const std::vector<ConsensusObjective>& objectives,
                          const Vector& x) {
  if (objectives.empty())
    throw InvalidInputError("averaged_objective needs at least one term");
  double sum = 0.0;
  for (const ConsensusObjective& f : objectives) sum += f.value(x);
  return sum / static_cast<double>(objectives.size());
}

} // namespace cipm
