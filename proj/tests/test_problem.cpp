#include <doctest.h>

#include <cmath>
#include <vector>

#include "cipm/errors.hpp"
#include "cipm/families.hpp"
#include "cipm/kkt.hpp"
#include "cipm/problem.hpp"

#include "helpers.hpp"

using namespace cipm;

namespace {

std::vector<LocalSubproblem> subproblems(
    const std::vector<FamilyInstance>& agents) {
  std::vector<LocalSubproblem> sps;
  for (const auto& fi : agents) sps.push_back(fi.make_subproblem());
  return sps;
}

} // namespace

TEST_CASE("quadratic subproblem evaluates value, gradient and hessian") {
  Matrix P(2, 2);
  P << 2.0, 1.0, 1.0, 3.0;
  Vector q(2);
  q << 1.0, -1.0;
  QuadraticData data{P, q};
  LocalSubproblem sp = data.make_subproblem();

  CHECK(sp.p == 2);
  CHECK(sp.extra_dim == 0);
  CHECK(sp.ineq_count == 0);
  CHECK(sp.eq_count == 0);
  CHECK(sp.dim() == 2);

  Vector x(2);
  x << 0.5, -2.0;
  CHECK(sp.value(x) == doctest::Approx(7.75).epsilon(1e-14));
  Vector g = sp.gradient(x);
  CHECK(g[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(-6.5).epsilon(1e-14));
  CHECK((sp.hessian(x) - P).norm() == doctest::Approx(0.0));
}

TEST_CASE("assembling a relaxed problem rejects bad inputs") {
  Rng rng(11);
  auto agents = subproblems(testutil::random_quadratics(rng, 2, 3));

  CHECK_THROWS_AS(assemble_relaxed_problem({}, 1e-2), InvalidInputError);
  CHECK_THROWS_AS(assemble_relaxed_problem(agents, 0.0), InvalidInputError);
  CHECK_THROWS_AS(assemble_relaxed_problem(agents, -1e-3), InvalidInputError);

  auto mixed = subproblems(testutil::random_quadratics(rng, 1, 3));
  auto other = subproblems(testutil::random_quadratics(rng, 1, 4));
  mixed.push_back(other.front());
  CHECK_THROWS_AS(assemble_relaxed_problem(mixed, 1e-2), DimensionError);
}

TEST_CASE("total inequality count adds one ball per agent") {
  Rng rng(21);
  RelaxedProblem prob =
      testutil::build_problem(testutil::random_quadratics(rng, 3, 2), 1e-2);
  CHECK(prob.total_ineq_count() == 3);

  RelaxedProblem hp =
      testutil::build_problem(testutil::random_hubers(rng, 2, 2, 4), 1e-2);
  // each agent contributes 5n rows plus its ball
  CHECK(hp.total_ineq_count() == 2 * (5 * 4 + 1));
}

TEST_CASE("check_wellformed flags missing pieces") {
  Matrix P = Matrix::Identity(2, 2);
  Vector q = Vector::Zero(2);
  LocalSubproblem sp = QuadraticData{P, q}.make_subproblem();
  CHECK_NOTHROW(sp.check_wellformed());

  LocalSubproblem broken = sp;
  broken.value = nullptr;
  CHECK_THROWS_AS(broken.check_wellformed(), InvalidInputError);

  broken = sp;
  broken.p = 0;
  CHECK_THROWS_AS(broken.check_wellformed(), InvalidInputError);

  broken = sp;
  broken.ineq_count = 1; // claims rows but provides no evaluators
  CHECK_THROWS_AS(broken.check_wellformed(), InvalidInputError);

  broken = sp;
  broken.eq_count = 1;
  broken.A = Matrix::Ones(1, 3); // wrong column count for dim() == 2
  broken.b = Vector::Zero(1);
  CHECK_THROWS_AS(broken.check_wellformed(), DimensionError);

  broken = sp;
  broken.eq_count = 1;
  broken.A = Matrix::Ones(1, 2);
  broken.b = Vector::Zero(2); // wrong length
  CHECK_THROWS_AS(broken.check_wellformed(), DimensionError);

  broken = sp;
  broken.extra_dim = 2;
  CHECK_THROWS_AS(broken.check_wellformed(), InvalidInputError);
}

TEST_CASE("initialize produces the documented starting state") {
  const double eps = 1e-3;
  Rng rng(31);
  RelaxedProblem prob =
      testutil::build_problem(testutil::random_quadratics(rng, 2, 2), eps);

  SolverConfig cfg;
  cfg.epsilon = eps;
  Vector x0(2);
  x0 << 0.3, -0.7;
  cfg.x0 = x0;

  Iterate it = initialize(prob, cfg);
  CHECK(it.iteration == 0);
  CHECK((it.x - x0).norm() == 0.0);
  REQUIRE(it.agents.size() == 2);
  for (const auto& st : it.agents) {
    CHECK((st.x_i - x0).norm() == 0.0);
    CHECK(st.t_i.size() == 0);
    CHECK(st.z.size() == 0);
    CHECK(st.v.size() == 0);
    CHECK(st.lambda == 1.0);
  }
  CHECK(strictly_feasible(prob, it));

  // with x_i == x each ball contributes eta_i = eps^2, so
  // delta = mu * m_total / (N eps^2) exactly
  const double eta0 = eps * eps + eps * eps;
  CHECK(it.delta == 10.0 * 2.0 / eta0);
}

TEST_CASE("initialize rejects a size-mismatched starting point") {
  Rng rng(41);
  RelaxedProblem prob =
      testutil::build_problem(testutil::random_quadratics(rng, 2, 3), 1e-2);
  SolverConfig cfg;
  cfg.epsilon = 1e-2;
  cfg.x0 = Vector::Zero(2);
  CHECK_THROWS_AS(initialize(prob, cfg), DimensionError);
}

TEST_CASE("initialize keeps epigraph starts strictly interior") {
  Rng rng(51);
  RelaxedProblem prob =
      testutil::build_problem(testutil::random_hubers(rng, 3, 4, 6), 1e-3);
  SolverConfig cfg;
  cfg.epsilon = 1e-3;
  Iterate it = initialize(prob, cfg);
  CHECK(strictly_feasible(prob, it));
  for (Index i = 0; i < prob.agent_count(); ++i) {
    const auto& sp = prob.agents[static_cast<std::size_t>(i)];
    const auto& st = it.agents[static_cast<std::size_t>(i)];
    CHECK(st.t_i.size() == sp.extra_dim);
    Vector g = sp.ineq_value(st.stacked());
    CHECK((g.array() < 0.0).all());
  }
}

TEST_CASE("initialize surfaces families that cannot start interior") {
  LocalSubproblem sp;
  sp.family = "bad-start";
  sp.p = 1;
  sp.extra_dim = 1;
  sp.ineq_count = 1;
  sp.value = [](const Vector& y) { return 0.5 * y[0] * y[0]; };
  sp.gradient = [](const Vector& y) {
    Vector g(2);
    g << y[0], 0.0;
    return g;
  };
  sp.hessian = [](const Vector&) {
    Matrix H = Matrix::Zero(2, 2);
    H(0, 0) = 1.0;
    return H;
  };
  // constraint t <= 0 violated by the proposed start t = +1
  sp.ineq_value = [](const Vector& y) {
    return Vector(Vector::Constant(1, y[1]));
  };
  sp.ineq_jacobian = [](const Vector&) {
    Matrix J = Matrix::Zero(1, 2);
    J(0, 1) = 1.0;
    return J;
  };
  sp.ineq_weighted_hessian = [](const Vector&, const Vector&) {
    return Matrix(Matrix::Zero(2, 2));
  };
  sp.initial_extra = [](const Vector&) {
    return Vector(Vector::Constant(1, 1.0));
  };

  RelaxedProblem prob = assemble_relaxed_problem({sp}, 1e-2);
  SolverConfig cfg;
  cfg.epsilon = 1e-2;
  CHECK_THROWS_AS(initialize(prob, cfg), UnsupportedInitializationError);
}

TEST_CASE("strictly_feasible spots every violation mode") {
  Rng rng(61);
  RelaxedProblem prob =
      testutil::build_problem(testutil::random_quadratics(rng, 2, 2), 1e-2);
  SolverConfig cfg;
  cfg.epsilon = 1e-2;
  Iterate good = initialize(prob, cfg);
  CHECK(strictly_feasible(prob, good));

  Iterate bad = good;
  bad.agents[0].x_i[0] += 1.0; // leaves the ball
  CHECK_FALSE(strictly_feasible(prob, bad));

  bad = good;
  bad.agents[1].lambda = 0.0;
  CHECK_FALSE(strictly_feasible(prob, bad));

  bad = good;
  bad.x = Vector::Zero(3);
  CHECK_FALSE(strictly_feasible(prob, bad));

  RelaxedProblem hp =
      testutil::build_problem(testutil::random_hubers(rng, 1, 2, 3), 1e-2);
  Iterate hit = initialize(hp, cfg);
  CHECK(strictly_feasible(hp, hit));
  hit.agents[0].z[0] = -1.0;
  CHECK_FALSE(strictly_feasible(hp, hit));
}

TEST_CASE("solver config validation rejects out-of-range fields") {
  SolverConfig good;
  CHECK_NOTHROW(good.validate());

  SolverConfig c = good;
  c.mu = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);
  c = good;
  c.beta = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);
  c = good;
  c.alpha_ls = 0.5;
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);
  c = good;
  c.epsilon = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);
  c = good;
  c.eps_feas = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);
  c = good;
  c.max_iter = -1;
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);
  c = good;
  c.min_step = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);
}
