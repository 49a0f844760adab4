#pragma once

#include <string>
#include <vector>

#include "cipm/driver.hpp"
#include "cipm/experiments.hpp"
#include "cipm/oracle.hpp"
#include "cipm/problem.hpp"

namespace testutil {

using namespace cipm;

inline std::vector<FamilyInstance> random_quadratics(Rng& rng, Index n,
                                                     Index p) {
  std::vector<FamilyInstance> agents;
  for (Index i = 0; i < n; ++i) {
    Matrix B(p, p);
    for (Index r = 0; r < p; ++r)
      for (Index c = 0; c < p; ++c) B(r, c) = rng.uniform(-1.0, 1.0);
    QuadraticData data;
    data.P = B.transpose() * B + Matrix::Identity(p, p);
    data.q.resize(p);
    for (Index j = 0; j < p; ++j) data.q(j) = rng.uniform(-1.0, 1.0);
    FamilyInstance fi;
    fi.family = "quadratic";
    fi.quadratic = std::move(data);
    agents.push_back(std::move(fi));
  }
  return agents;
}

inline std::vector<FamilyInstance> random_hubers(Rng& rng, Index n, Index p,
                                                 Index rows) {
  std::vector<FamilyInstance> agents;
  for (Index i = 0; i < n; ++i) {
    Matrix A(rows, p);
    Vector y(rows);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < p; ++c) A(r, c) = rng.uniform(-1.0, 1.0);
      y(r) = rng.uniform(-2.0, 2.0);
    }
    FamilyInstance fi;
    fi.family = "huber-rls";
    fi.huber = HuberData{std::move(A), std::move(y), 1.0};
    agents.push_back(std::move(fi));
  }
  return agents;
}

inline std::vector<FamilyInstance> random_logistics(Rng& rng, Index n,
                                                    Index p, Index rows) {
  std::vector<FamilyInstance> agents;
  for (Index i = 0; i < n; ++i) {
    Matrix phi(rows, p);
    Vector y(rows);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < p; ++c) phi(r, c) = rng.uniform(-1.0, 1.0);
      y(r) = rng.uniform() < 0.5 ? 0.0 : 1.0;
    }
    FamilyInstance fi;
    fi.family = "logreg";
    fi.logistic = LogisticData{std::move(phi), std::move(y), 1.0, n};
    agents.push_back(std::move(fi));
  }
  return agents;
}

inline std::vector<FamilyInstance> random_family(const std::string& family,
                                                 Rng& rng, Index n,
                                                 Index p) {
  if (family == "quadratic") return random_quadratics(rng, n, p);
  if (family == "huber-rls") return random_hubers(rng, n, p, p + 3);
  return random_logistics(rng, n, p, p + 3);
}

inline RelaxedProblem build_problem(const std::vector<FamilyInstance>& agents,
                                    double epsilon) {
  std::vector<LocalSubproblem> sps;
  for (const FamilyInstance& fi : agents) sps.push_back(fi.make_subproblem());
  return assemble_relaxed_problem(std::move(sps), epsilon);
}

/// Smooth curved inequality ||y||^2 <= radius^2 around a quadratic cost;
/// the families shipped with the library only have linear or absent G,
/// so this covers the Hessian-of-G path.
inline LocalSubproblem curved_cap_subproblem(Index p, double radius) {
  LocalSubproblem sp;
  sp.family = "curved-cap";
  sp.p = p;
  sp.extra_dim = 0;
  sp.ineq_count = 1;
  sp.eq_count = 0;
  sp.value = [](const Vector& y) { return 0.5 * y.squaredNorm(); };
  sp.gradient = [](const Vector& y) { return Vector(y); };
  sp.hessian = [p](const Vector&) { return Matrix(Matrix::Identity(p, p)); };
  sp.ineq_value = [radius](const Vector& y) {
    return Vector(Vector::Constant(1, y.squaredNorm() - radius * radius));
  };
  sp.ineq_jacobian = [](const Vector& y) {
    Matrix J(1, y.size());
    J.row(0) = 2.0 * y.transpose();
    return J;
  };
  sp.ineq_weighted_hessian = [p](const Vector&, const Vector& w) {
    return Matrix(2.0 * w(0) * Matrix::Identity(p, p));
  };
  return sp;
}

/// Stationarity, centrality, and primal rows of the perturbed Newton
/// system, assembled directly from the evaluators with no elimination.
/// An exact direction drives every row to zero, so this is the
/// ground-truth check for both direction engines.
inline double unreduced_residual_norm(const RelaxedProblem& prob,
                                      const Iterate& it,
                                      const Direction& dir) {
  const Index p = prob.p;
  const double inv_delta = 1.0 / it.delta;
  double sq = 0.0;
  Vector x_row = Vector::Zero(p);

  for (Index i = 0; i < prob.agent_count(); ++i) {
    const LocalSubproblem& sp = prob.agents[static_cast<std::size_t>(i)];
    const AgentState& st = it.agents[static_cast<std::size_t>(i)];
    const AgentDirection& ad = dir.agents[static_cast<std::size_t>(i)];
    const Vector y = st.stacked();
    const Vector dy = ad.stacked();
    const double s = it.ball_slack(i, prob.epsilon);
    const Vector w_g = it.x - st.x_i;
    Vector w_l = Vector::Zero(sp.dim());
    w_l.head(p) = st.x_i - it.x;

    Vector row = sp.hessian(y) * dy;
    row.head(p) += 2.0 * st.lambda * (ad.dx_i - dir.dx);
    row += 2.0 * ad.dlambda * w_l;
    row += sp.gradient(y) + 2.0 * st.lambda * w_l;
    if (sp.ineq_count > 0) {
      const Vector g = sp.ineq_value(y);
      const Matrix DG = sp.ineq_jacobian(y);
      row += sp.ineq_weighted_hessian(y, st.z) * dy;
      row += DG.transpose() * (st.z + ad.dz);

      const Vector r_cent = (-st.z.cwiseProduct(g)).array() - inv_delta;
      const Vector cent = st.z.cwiseProduct(DG * dy) +
                          g.cwiseProduct(ad.dz) - r_cent;
      sq += cent.squaredNorm();
    }
    if (sp.eq_count > 0) {
      row += sp.A.transpose() * (st.v + ad.dv);
      sq += (sp.A * dy - (sp.b - sp.A * y)).squaredNorm();
    }
    sq += row.squaredNorm();

    const double r_q = -st.lambda * s - inv_delta;
    const double ball = 2.0 * st.lambda * (w_l.head(p).dot(ad.dx_i) +
                                           w_g.dot(dir.dx)) +
                        s * ad.dlambda - r_q;
    sq += ball * ball;

    x_row += 2.0 * ad.dlambda * w_g +
             2.0 * st.lambda * (dir.dx - ad.dx_i) + 2.0 * st.lambda * w_g;
  }
  sq += x_row.squaredNorm();
  return std::sqrt(sq);
}

/// Residual rows with the zero direction: the plain KKT residual norm,
/// used to put the post-solve rows on a relative scale.
inline double residual_scale(const RelaxedProblem& prob, const Iterate& it) {
  Direction zero;
  zero.dx = Vector::Zero(prob.p);
  zero.agents.resize(static_cast<std::size_t>(prob.agent_count()));
  for (Index i = 0; i < prob.agent_count(); ++i) {
    const LocalSubproblem& sp = prob.agents[static_cast<std::size_t>(i)];
    AgentDirection& ad = zero.agents[static_cast<std::size_t>(i)];
    ad.dx_i = Vector::Zero(prob.p);
    ad.dt_i = Vector::Zero(sp.extra_dim);
    ad.dz = Vector::Zero(sp.ineq_count);
    ad.dv = Vector::Zero(sp.eq_count);
    ad.dlambda = 0.0;
  }
  return unreduced_residual_norm(prob, it, zero);
}

inline Vector stack_direction(const Direction& dir) {
  std::vector<double> flat;
  auto push = [&flat](const Vector& v) {
    flat.insert(flat.end(), v.data(), v.data() + v.size());
  };
  push(dir.dx);
  for (const AgentDirection& ad : dir.agents) {
    push(ad.dx_i);
    push(ad.dt_i);
    push(ad.dz);
    push(ad.dv);
    flat.push_back(ad.dlambda);
  }
  return Eigen::Map<const Vector>(flat.data(),
                                  static_cast<Index>(flat.size()));
}

inline double direction_rel_diff(const Direction& got,
                                 const Direction& want) {
  const Vector g = stack_direction(got);
  const Vector w = stack_direction(want);
  return (g - w).norm() / std::max(w.norm(), 1e-30);
}

} // namespace testutil
