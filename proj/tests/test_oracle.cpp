#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "cipm/errors.hpp"
#include "cipm/families.hpp"
#include "cipm/kkt.hpp"
#include "cipm/oracle.hpp"

#include "helpers.hpp"

using namespace cipm;

namespace {

// reweighted least squares for the clipped-quadratic cost, as an
// independent reference: weights min(1, M/|r|) give the exact stationary
// condition of the penalty at the fixed point
Vector irls_reference(const std::vector<HuberData>& parts) {
  Index rows = 0;
  const Index p = parts.front().A.cols();
  for (const auto& d : parts) rows += d.A.rows();
  Matrix A(rows, p);
  Vector y(rows);
  Index at = 0;
  for (const auto& d : parts) {
    A.middleRows(at, d.A.rows()) = d.A;
    y.segment(at, d.y.size()) = d.y;
    at += d.A.rows();
  }
  const double m = parts.front().half_width;

  Vector x = (A.transpose() * A).ldlt().solve(A.transpose() * y);
  for (int step = 0; step < 500; ++step) {
    const Vector r = A * x - y;
    Vector w(rows);
    Vector d(rows);
    for (Index j = 0; j < rows; ++j) {
      const double a = std::abs(r[j]);
      w[j] = a <= m ? 1.0 : m / a;
      d[j] = a <= m ? 2.0 * r[j] : (r[j] > 0.0 ? 2.0 * m : -2.0 * m);
    }
    if ((A.transpose() * d).norm() <= 1e-9) return x;
    const Matrix awa = A.transpose() * w.asDiagonal() * A;
    x = awa.ldlt().solve(A.transpose() * w.asDiagonal() * y);
  }
  return x;
}

} // namespace

TEST_CASE("a zero-residual iterate yields the zero direction") {
  Matrix P(1, 1);
  P << 2.0;
  Vector q(1);
  q << -1.0;
  RelaxedProblem prob =
      assemble_relaxed_problem({QuadraticData{P, q}.make_subproblem()}, 0.5);

  Iterate it;
  it.x = Vector::Constant(1, 0.5); // unconstrained minimizer of x^2 - x
  AgentState st;
  st.x_i = it.x;
  st.lambda = 1.0; // with delta = 1/(lambda eps^2) the ball row vanishes
  it.agents.push_back(st);
  it.delta = 4.0;

  CHECK(testutil::residual_scale(prob, it) <= 1e-14);

  Direction dense = dense_kkt_direction(prob, it);
  CHECK(testutil::stack_direction(dense).norm() <= 1e-12);
  Direction mp = message_passing_direction(prob, it);
  CHECK(testutil::stack_direction(mp).norm() <= 1e-12);
}

TEST_CASE("the stacked system is symmetric with an arrow sparsity pattern") {
  Rng rng(311);
  auto quad = testutil::random_quadratics(rng, 1, 3)[0];
  quad.A = Matrix::Zero(1, 3);
  quad.A << 1.0, 2.0, -1.0;
  quad.b = Vector::Constant(1, 0.2);
  std::vector<LocalSubproblem> sps{
      quad.make_subproblem(),
      testutil::random_hubers(rng, 1, 3, 2)[0].make_subproblem(),
      testutil::random_logistics(rng, 1, 3, 5)[0].make_subproblem()};
  RelaxedProblem prob = assemble_relaxed_problem(sps, 1e-2);
  Iterate it = random_interior_iterate(prob, rng);

  DenseSystem ds = assemble_dense_system(prob, it);
  const Index n = ds.K.rows();
  CHECK(ds.K.cols() == n);
  CHECK(ds.rhs.size() == n);
  CHECK((ds.K - ds.K.transpose()).norm() <= 1e-12 * ds.K.norm());

  REQUIRE(ds.agent_offset.size() == 3);
  CHECK(ds.agent_offset[0] == 0);
  CHECK(ds.x_offset + prob.p == n);
  std::vector<Index> ends;
  for (std::size_t i = 0; i < sps.size(); ++i) {
    const Index end = i + 1 < sps.size() ? ds.agent_offset[i + 1]
                                         : ds.x_offset;
    CHECK(end - ds.agent_offset[i] == sps[i].dim() + sps[i].eq_count);
    ends.push_back(end);
  }

  // blocks linking two different agents are identically zero
  for (std::size_t i = 0; i < sps.size(); ++i)
    for (std::size_t j = 0; j < sps.size(); ++j) {
      if (i == j) continue;
      const Index ri = ds.agent_offset[i], ci = ds.agent_offset[j];
      CHECK(ds.K.block(ri, ci, ends[i] - ri, ends[j] - ci).norm() == 0.0);
    }
}

TEST_CASE("the summed-quadratic minimizer matches hand arithmetic") {
  QuadraticData a{Matrix::Constant(1, 1, 2.0), Vector::Constant(1, 1.0)};
  QuadraticData b{Matrix::Constant(1, 1, 4.0), Vector::Constant(1, -7.0)};
  Vector x = quadratic_optimum({a, b});
  REQUIRE(x.size() == 1);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));

  QuadraticData flat{Matrix::Zero(2, 2), Vector::Ones(2)};
  CHECK_THROWS_AS(quadratic_optimum({flat}), OracleFailureError);
}

TEST_CASE("the pooled logistic minimizer zeroes the pooled gradient") {
  Rng rng(313);
  std::vector<LogisticData> parts;
  for (const auto& fi : testutil::random_logistics(rng, 2, 3, 9))
    parts.push_back(*fi.logistic);

  Vector x = logistic_optimum(parts);
  Vector grad = 2.0 * parts.front().rho * x;
  for (const auto& d : parts) {
    const Vector z = d.phi * x;
    Vector s(z.size());
    for (Index j = 0; j < z.size(); ++j) s[j] = sigmoid(z[j]) - d.y[j];
    grad += d.phi.transpose() * s;
  }
  CHECK(grad.norm() <= 1e-9);
}

TEST_CASE("the pooled robust-regression minimizer matches reweighting") {
  Rng rng(317);
  std::vector<HuberData> parts;
  for (const auto& fi : testutil::random_hubers(rng, 2, 2, 6))
    parts.push_back(*fi.huber);

  const Vector ref = irls_reference(parts);
  const Vector got = huber_optimum(parts);
  CHECK((got - ref).norm() <= 1e-4 * std::max(1.0, ref.norm()));
}

TEST_CASE("the centralized engine emits a consistent trace") {
  Rng rng(331);
  auto agents = testutil::random_quadratics(rng, 3, 2);
  RelaxedProblem prob = testutil::build_problem(agents, 1e-3);
  SolverConfig cfg;
  cfg.epsilon = 1e-3;
  cfg.collect_iterates = true;

  SolveResult res = solve_centralized(prob, cfg);
  REQUIRE(res.solution.status == Status::Converged);
  REQUIRE(!res.trace.rows.empty());

  const auto& rows = res.trace.rows;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& row = rows[k];
    CHECK(row.iter == static_cast<int>(k) + 1);
    CHECK(row.alpha > 0.0);
    CHECK(row.alpha <= 1.0);
    CHECK(row.eta_hat > 0.0);
    CHECK(row.delta > 0.0);
    CHECK(row.trials >= 1);
    CHECK(row.exchanges == 0);
    CHECK(row.residual_after < row.residual_before);
    CHECK(row.x.size() == prob.p);
  }
  for (std::size_t k = 0; k + 1 < rows.size(); ++k)
    CHECK(rows[k + 1].delta ==
          update_perturbation(rows[k].eta_hat, prob.total_ineq_count(),
                              cfg.mu));

  // converged means the last row satisfies the documented test
  CHECK(check_termination(rows.back().r_primal_norm,
                          rows.back().r_dual_norm, rows.back().eta_hat,
                          cfg.eps_feas, cfg.eps_d));

  // every agent reports the consensus point
  for (const Vector& xa : res.solution.x_agents)
    CHECK((xa - res.solution.x).norm() == 0.0);
  CHECK(res.solution.iterations == static_cast<int>(rows.size()));

  // pre-step snapshots plus one final state, all strictly feasible
  REQUIRE(res.trace.iterates.size() == rows.size() + 1);
  for (const Iterate& snap : res.trace.iterates)
    CHECK(strictly_feasible(prob, snap));
  CHECK((res.trace.iterates.back().x - res.solution.x).norm() == 0.0);

  // objective bookkeeping
  double sum = 0.0;
  for (double h : res.solution.agent_objectives) sum += h;
  CHECK(res.solution.objective_sum == doctest::Approx(sum).epsilon(1e-12));
  CHECK(res.solution.objective_avg ==
        doctest::Approx(sum / 3.0).epsilon(1e-12));
}

TEST_CASE("the centralized engine reports failure statuses") {
  Rng rng(337);

  auto agents = testutil::random_quadratics(rng, 2, 2);
  RelaxedProblem prob = testutil::build_problem(agents, 1e-3);
  SolverConfig cfg;
  cfg.epsilon = 1e-3;
  cfg.max_iter = 2;
  SolveResult res = solve_centralized(prob, cfg);
  CHECK(res.solution.status == Status::MaxIterations);
  CHECK(res.trace.rows.size() == 2);

  FamilyInstance degenerate = testutil::random_quadratics(rng, 1, 2)[0];
  degenerate.A = Matrix(2, 2);
  degenerate.A << 1.0, 1.0, 1.0, 1.0;
  degenerate.b = Vector::Ones(2);
  RelaxedProblem bad = testutil::build_problem({degenerate}, 1e-3);
  SolverConfig cfg2;
  cfg2.epsilon = 1e-3;
  SolveResult rb = solve_centralized(bad, cfg2);
  CHECK(rb.solution.status == Status::SingularSystem);
}

TEST_CASE("relaxed solves approach the pooled minimizer as epsilon shrinks") {
  Rng rng(347);
  auto agents = testutil::random_quadratics(rng, 3, 2);
  const Vector x_star = unrelaxed_optimum(agents);

  std::vector<ConsensusObjective> objectives;
  for (const auto& fi : agents) objectives.push_back(fi.make_objective());

  // a larger ball can only lower the constrained optimum, and the solution
  // closes in on the pooled minimizer linearly in the radius
  double last_value = -std::numeric_limits<double>::infinity();
  double last_dist = std::numeric_limits<double>::infinity();
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    SolverConfig cfg;
    cfg.epsilon = eps;
    cfg.eps_d = 1e-9;
    cfg.eps_feas = 1e-10;
    SolveResult res =
        solve_centralized(testutil::build_problem(agents, eps), cfg);
    REQUIRE(res.solution.status == Status::Converged);
    CHECK(res.solution.objective_avg >= last_value - 1e-10);
    const double dist = (res.solution.x - x_star).norm();
    CHECK(dist < last_dist);
    last_value = res.solution.objective_avg;
    last_dist = dist;
  }
  CHECK(last_dist <= 1e-2 * std::max(1.0, x_star.norm()));
}

TEST_CASE("averaged objective divides the summed consensus values") {
  Matrix P = 2.0 * Matrix::Identity(1, 1);
  Vector q = Vector::Zero(1);
  QuadraticData a{P, q};
  QuadraticData b{P, Vector::Constant(1, 1.0)};
  std::vector<ConsensusObjective> fs{a.make_objective(), b.make_objective()};
  Vector x = Vector::Constant(1, 2.0);
  // (4 + 6) / 2
  CHECK(averaged_objective(fs, x) == doctest::Approx(5.0).epsilon(1e-15));
}
