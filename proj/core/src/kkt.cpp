#include "cipm/kkt.hpp"

#include <cmath>
#include <limits>

#include "cipm/errors.hpp"

namespace cipm {

namespace {

constexpr double kRcondFloor = 1e-14;
constexpr double kRidge = 1e-10;
constexpr double kFractionToBoundary = 0.99;

void require_interior(const Vector& g, double slack) {
  for (Index j = 0; j < g.size(); ++j)
    if (!(g[j] < 0.0))
      throw FeasibilityError("G_" + std::to_string(j) + " = " +
                             std::to_string(g[j]) +
                             " is not strictly negative");
  if (!(slack < 0.0))
    throw FeasibilityError("ball slack " + std::to_string(slack) +
                           " is not strictly negative");
}

} // namespace

HessianBlocks assemble_local_hessian(const LocalSubproblem& sp,
                                     const Vector& x, const AgentState& st,
                                     double epsilon) {
  const Index dim = sp.dim();
  const Index p = sp.p;
  const Vector y = st.stacked();
  const double s = (x - st.x_i).squaredNorm() - epsilon * epsilon;

  HessianBlocks H;
  H.H_ll = sp.hessian(y);
  if (sp.ineq_count > 0) {
    const Vector g = sp.ineq_value(y);
    require_interior(g, s);
    H.H_ll += sp.ineq_weighted_hessian(y, st.z);
    const Matrix jac = sp.ineq_jacobian(y);
    // Barrier curvature of the eliminated inequality duals.
    H.H_ll += jac.transpose() *
              (-st.z.array() / g.array()).matrix().asDiagonal() * jac;
  } else {
    require_interior(Vector(), s);
  }

  const double lam = st.lambda;
  const Vector w_g = x - st.x_i;           // p
  Vector w_l = Vector::Zero(dim);          // [x_i - x; 0]
  w_l.head(p) = -w_g;

  H.H_ll.topLeftCorner(p, p) += 2.0 * lam * Matrix::Identity(p, p);
  H.H_lg = Matrix::Zero(dim, p);
  H.H_lg.topRows(p) = -2.0 * lam * Matrix::Identity(p, p);
  H.H_gg = 2.0 * lam * Matrix::Identity(p, p);

  // Rank-one barrier term of the eliminated ball dual; -4 lam / s > 0.
  const double c = -4.0 * lam / s;
  H.H_ll += c * (w_l * w_l.transpose());
  H.H_lg += c * (w_l * w_g.transpose());
  H.H_gg += c * (w_g * w_g.transpose());
  return H;
}

LocalResiduals eval_residuals(const LocalSubproblem& sp, const Vector& x,
                              const AgentState& st, double delta,
                              double epsilon) {
  const Index p = sp.p;
  const Vector y = st.stacked();
  const double s = (x - st.x_i).squaredNorm() - epsilon * epsilon;
  const double inv_delta = 1.0 / delta;

  LocalResiduals r;
  r.r_dual_local = sp.gradient(y);
  r.r_dual_local.head(p) += 2.0 * st.lambda * (st.x_i - x);
  if (sp.ineq_count > 0) {
    const Vector g = sp.ineq_value(y);
    r.r_dual_local += sp.ineq_jacobian(y).transpose() * st.z;
    r.r_cent = (-st.z.array() * g.array() - inv_delta).matrix();
  } else {
    r.r_cent = Vector();
  }
  if (sp.eq_count > 0) {
    r.r_dual_local += sp.A.transpose() * st.v;
    r.r_primal = sp.b - sp.A * y;
  } else {
    r.r_primal = Vector();
  }
  r.r_dual_global = 2.0 * st.lambda * (x - st.x_i);
  r.r_q = -st.lambda * s - inv_delta;
  return r;
}

LinearTerm assemble_linear_term(const LocalSubproblem& sp, const Vector& x,
                                const AgentState& st,
                                const LocalResiduals& res, double epsilon) {
  const Index p = sp.p;
  const Vector y = st.stacked();
  const double s = (x - st.x_i).squaredNorm() - epsilon * epsilon;

  LinearTerm lt;
  lt.r_l = res.r_dual_local;
  if (sp.ineq_count > 0) {
    const Vector g = sp.ineq_value(y);
    lt.r_l += sp.ineq_jacobian(y).transpose() *
              (res.r_cent.array() / g.array()).matrix();
  }
  const double c = 2.0 * res.r_q / s;
  lt.r_l.head(p) += c * (st.x_i - x);
  lt.r_g = res.r_dual_global + c * (x - st.x_i);
  return lt;
}

namespace {

LocalKktResult solve_kkt_once(const Matrix& K, const Matrix& A,
                              const HessianBlocks& H, const Vector& r_l,
                              const Vector& r_primal, int iteration) {
  const Index dim = H.H_ll.rows();
  const Index u = A.rows();
  const Index p = H.H_lg.cols();

  Eigen::PartialPivLU<Matrix> lu(K);
  LocalKktResult out;
  out.rcond = lu.rcond();
  out.iteration = iteration;
  if (!(out.rcond > kRcondFloor)) return out; // caller decides

  Vector rhs(dim + u);
  rhs.head(dim) = -r_l;
  if (u > 0) rhs.tail(u) = r_primal;
  const Vector sol = lu.solve(rhs);
  out.u1 = sol.head(dim);
  out.u2 = u > 0 ? Vector(sol.tail(u)) : Vector();

  Matrix rhs_m = Matrix::Zero(dim + u, p);
  rhs_m.topRows(dim) = -H.H_lg;
  const Matrix sol_m = lu.solve(rhs_m);
  out.U1 = sol_m.topRows(dim);
  out.U2 = u > 0 ? Matrix(sol_m.bottomRows(u)) : Matrix(0, p);

  if (!out.u1.allFinite() || !out.U1.allFinite()) out.rcond = 0.0;
  return out;
}

} // namespace

LocalKktResult solve_local_kkt(const HessianBlocks& H, const Matrix& A,
                               const Vector& r_l, const Vector& r_primal,
                               int agent, bool ridge_fallback, int iteration) {
  const Index dim = H.H_ll.rows();
  const Index u = A.rows();

  Matrix K = Matrix::Zero(dim + u, dim + u);
  K.topLeftCorner(dim, dim) = H.H_ll;
  if (u > 0) {
    K.topRightCorner(dim, u) = A.transpose();
    K.bottomLeftCorner(u, dim) = A;
  }

  LocalKktResult out = solve_kkt_once(K, A, H, r_l, r_primal, iteration);
  if (out.rcond > kRcondFloor) return out;

  if (ridge_fallback) {
    K.topLeftCorner(dim, dim) += kRidge * Matrix::Identity(dim, dim);
    out = solve_kkt_once(K, A, H, r_l, r_primal, iteration);
    if (out.rcond > kRcondFloor) return out;
  }
  throw SingularKktError(
      agent, "agent " + std::to_string(agent) +
                 ": local KKT system is numerically singular (rcond " +
                 std::to_string(out.rcond) + ")");
}

void dual_directions(const LocalSubproblem& sp, const Vector& x,
                     const AgentState& st, const LocalResiduals& res,
                     double epsilon, const Vector& dy, const Vector& dx,
                     Vector& dz, double& dlambda) {
  const Index p = sp.p;
  const Vector y = st.stacked();
  const double s = (x - st.x_i).squaredNorm() - epsilon * epsilon;

  if (sp.ineq_count > 0) {
    const Vector g = sp.ineq_value(y);
    const Vector jdy = sp.ineq_jacobian(y) * dy;
    dz = (-(st.z.array() * jdy.array() - res.r_cent.array()) / g.array())
             .matrix();
  } else {
    dz = Vector();
  }
  const double coupling =
      (st.x_i - x).dot(dy.head(p)) + (x - st.x_i).dot(dx);
  dlambda = (res.r_q - 2.0 * st.lambda * coupling) / s;
}

double dual_step_cap(const AgentState& st, const Vector& dz, double dlambda) {
  double ratio = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < dz.size(); ++j)
    if (dz[j] < 0.0) ratio = std::min(ratio, -st.z[j] / dz[j]);
  if (dlambda < 0.0) ratio = std::min(ratio, -st.lambda / dlambda);
  return std::min(1.0, kFractionToBoundary * ratio);
}

bool trial_feasible(const LocalSubproblem& sp, const Vector& x,
                    const AgentState& st, const AgentDirection& dir,
                    const Vector& dx, double alpha, double epsilon) {
  const Vector x_new = x + alpha * dx;
  const Vector xi_new = st.x_i + alpha * dir.dx_i;
  if (!((x_new - xi_new).squaredNorm() - epsilon * epsilon < 0.0))
    return false;
  if (sp.ineq_count > 0) {
    Vector y = st.stacked();
    y.head(sp.p) = xi_new;
    y.tail(sp.extra_dim) = st.t_i + alpha * dir.dt_i;
    const Vector g = sp.ineq_value(y);
    for (Index j = 0; j < g.size(); ++j)
      if (!(g[j] < 0.0)) return false;
  }
  return true;
}

ResidualShare residual_share(const LocalSubproblem& sp, const Vector& x,
                             const AgentState& st, double delta,
                             double epsilon) {
  const LocalResiduals res = eval_residuals(sp, x, st, delta, epsilon);
  ResidualShare share;
  share.global_block = res.r_dual_global;
  share.sq_dual = res.r_dual_local.squaredNorm();
  share.sq_cent = res.r_cent.squaredNorm() + res.r_q * res.r_q;
  share.sq_primal = res.r_primal.squaredNorm();
  return share;
}

void advance_state(AgentState& st, const AgentDirection& dir, double alpha) {
  st.x_i += alpha * dir.dx_i;
  if (st.t_i.size() > 0) st.t_i += alpha * dir.dt_i;
  if (st.z.size() > 0) st.z += alpha * dir.dz;
  if (st.v.size() > 0) st.v += alpha * dir.dv;
  st.lambda += alpha * dir.dlambda;
}

double surrogate_gap_local(const LocalSubproblem& sp, const Vector& x,
                           const AgentState& st, double epsilon) {
  const double s = (x - st.x_i).squaredNorm() - epsilon * epsilon;
  double eta = -st.lambda * s;
  if (sp.ineq_count > 0) eta -= st.z.dot(sp.ineq_value(st.stacked()));
  return eta;
}

double update_perturbation(double eta_hat, Index m_total, double mu) {
  if (!(eta_hat > 0.0))
    throw InvalidInputError("update_perturbation: eta_hat must be positive");
  return mu * static_cast<double>(m_total) / eta_hat;
}

bool check_termination(double r_primal_norm, double r_dual_norm,
                       double eta_hat, double eps_feas, double eps_d) {
  return r_primal_norm <= eps_feas && r_dual_norm <= eps_feas &&
         eta_hat <= eps_d;
}

Iterate initialize(const RelaxedProblem& prob, const SolverConfig& cfg) {
  cfg.validate();
  Iterate it;
  it.x = cfg.x0 ? *cfg.x0 : Vector::Zero(prob.p);
  if (it.x.size() != prob.p)
    throw DimensionError("initialize: x0 has size " +
                         std::to_string(it.x.size()) + ", expected " +
                         std::to_string(prob.p));

  double eta0 = 0.0;
  for (Index i = 0; i < prob.agent_count(); ++i) {
    const LocalSubproblem& sp = prob.agents[static_cast<std::size_t>(i)];
    AgentState st;
    st.x_i = it.x;
    st.t_i = sp.extra_dim > 0 ? sp.initial_extra(it.x) : Vector();
    if (st.t_i.size() != sp.extra_dim)
      throw UnsupportedInitializationError(
          "agent " + std::to_string(i) + ": initial_extra returned " +
          std::to_string(st.t_i.size()) + " entries, expected " +
          std::to_string(sp.extra_dim));
    st.z = Vector::Ones(sp.ineq_count);
    st.v = Vector::Zero(sp.eq_count);
    st.lambda = 1.0;
    if (sp.ineq_count > 0) {
      const Vector g = sp.ineq_value(st.stacked());
      for (Index j = 0; j < g.size(); ++j)
        if (!(g[j] < 0.0))
          throw UnsupportedInitializationError(
              "agent " + std::to_string(i) + ": starting point leaves G_" +
              std::to_string(j) + " = " + std::to_string(g[j]) +
              " outside the strict interior");
    }
    eta0 += surrogate_gap_local(sp, it.x, st, prob.epsilon);
    it.agents.push_back(std::move(st));
  }
  it.delta = update_perturbation(eta0, prob.total_ineq_count(), cfg.mu);
  it.iteration = 0;
  return it;
}

bool strictly_feasible(const RelaxedProblem& prob, const Iterate& it) {
  if (it.x.size() != prob.p) return false;
  if (static_cast<Index>(it.agents.size()) != prob.agent_count()) return false;
  for (Index i = 0; i < prob.agent_count(); ++i) {
    const LocalSubproblem& sp = prob.agents[static_cast<std::size_t>(i)];
    const AgentState& st = it.agents[static_cast<std::size_t>(i)];
    if (!(it.ball_slack(i, prob.epsilon) < 0.0)) return false;
    if (!(st.lambda > 0.0)) return false;
    if ((st.z.array() <= 0.0).any()) return false;
    if (sp.ineq_count > 0) {
      const Vector g = sp.ineq_value(st.stacked());
      if ((g.array() >= 0.0).any()) return false;
    }
  }
  return true;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::MaxIterations: return "max-iter";
    case Status::LineSearchFailure: return "line-search-failure";
    case Status::SingularSystem: return "singular-system";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (!(mu > 1.0)) throw InvalidConfigError("config: mu must be > 1");
  if (!(beta > 0.0 && beta < 1.0))
    throw InvalidConfigError("config: beta must lie in (0, 1)");
  if (!(alpha_ls > 0.0 && alpha_ls < 0.5))
    throw InvalidConfigError("config: alpha_ls must lie in (0, 0.5)");
  if (!(epsilon > 0.0))
    throw InvalidConfigError("config: epsilon must be positive");
  if (!(eps_feas > 0.0 && eps_d > 0.0))
    throw InvalidConfigError("config: tolerances must be positive");
  if (max_iter < 0)
    throw InvalidConfigError("config: max_iter must be >= 0");
  if (!(min_step > 0.0))
    throw InvalidConfigError("config: min_step must be positive");
  if (!(recv_timeout_sec > 0.0))
    throw InvalidConfigError("config: receive timeout must be positive");
}

} // namespace cipm
