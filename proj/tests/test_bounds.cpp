#include "doctest.h"

#include <Eigen/Eigenvalues>

#include "cipm/bounds.hpp"
#include "cipm/errors.hpp"
#include "cipm/oracle.hpp"

#include "helpers.hpp"

using namespace cipm;

TEST_CASE("suboptimality bound is epsilon times summed constants over N") {
  BoundInputs in;
  in.lipschitz = Vector(2);
  in.lipschitz << 1.0, 3.0;
  in.epsilon = 0.5;
  CHECK(suboptimality_bound(in) == doctest::Approx(1.0).epsilon(1e-15));

  in.epsilon = 0.0;
  CHECK(suboptimality_bound(in) == 0.0);
}

TEST_CASE("distance bound divides by the averaged modulus") {
  BoundInputs in;
  in.lipschitz = Vector(2);
  in.lipschitz << 1.0, 3.0;
  in.epsilon = 0.5;
  in.modulus = 2.0;
  // 2 * 0.5 * 4 / (2 * 2)
  CHECK(distance_bound(in) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("bound inputs are validated") {
  BoundInputs in;
  in.lipschitz = Vector(1);
  in.lipschitz << 1.0;
  in.epsilon = -0.1;
  CHECK_THROWS_AS(suboptimality_bound(in), InvalidInputError);

  in.epsilon = 0.1;
  CHECK_THROWS_AS(distance_bound(in), InvalidInputError); // no modulus

  in.modulus = -1.0;
  CHECK_THROWS_AS(distance_bound(in), InvalidInputError);

  in.modulus = 1.0;
  in.lipschitz(0) = -2.0;
  CHECK_THROWS_AS(suboptimality_bound(in), InvalidInputError);

  in.lipschitz.resize(0);
  CHECK_THROWS_AS(suboptimality_bound(in), InvalidInputError);
}

TEST_CASE("epsilon_for_tolerance inverts the suboptimality bound") {
  const double eps = epsilon_for_tolerance(4.0, 2, 0.1);
  CHECK(eps == doctest::Approx(0.05).epsilon(1e-15));

  BoundInputs in;
  in.lipschitz = Vector(2);
  in.lipschitz << 1.0, 3.0;
  in.epsilon = eps;
  CHECK(suboptimality_bound(in) == doctest::Approx(0.1).epsilon(1e-12));

  CHECK_THROWS_AS(epsilon_for_tolerance(0.0, 2, 0.1), InvalidInputError);
  CHECK_THROWS_AS(epsilon_for_tolerance(4.0, 0, 0.1), InvalidInputError);
  CHECK_THROWS_AS(epsilon_for_tolerance(4.0, 2, -0.1), InvalidInputError);
}

TEST_CASE("bounds grow with the relaxation level") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 1 + static_cast<Index>(rng.integer(6));
    BoundInputs a;
    a.lipschitz.resize(n);
    for (Index i = 0; i < n; ++i) a.lipschitz(i) = rng.uniform(0.1, 5.0);
    a.modulus = rng.uniform(0.1, 3.0);
    BoundInputs b = a;
    a.epsilon = rng.uniform(0.0, 1.0);
    b.epsilon = a.epsilon + rng.uniform(0.0, 1.0);
    CHECK(suboptimality_bound(a) <= suboptimality_bound(b));
    CHECK(distance_bound(a) <= distance_bound(b));
  }
}

TEST_CASE("solved quadratic instances respect both relaxation bounds") {
  Rng rng(23);
  const Index n_agents = 3, p = 3;
  const auto agents = testutil::random_quadratics(rng, n_agents, p);
  const Vector x_star = unrelaxed_optimum(agents);

  std::vector<ConsensusObjective> objectives;
  Matrix p_sum = Matrix::Zero(p, p);
  for (const FamilyInstance& fi : agents) {
    objectives.push_back(fi.make_objective());
    p_sum += fi.quadratic->P;
  }
  const double modulus = Eigen::SelfAdjointEigenSolver<Matrix>(
                             p_sum / static_cast<double>(n_agents))
                             .eigenvalues()
                             .minCoeff();

  const double eps = 1e-2;
  SolverConfig cfg;
  cfg.epsilon = eps;
  cfg.eps_d = 1e-9;
  cfg.eps_feas = 1e-10;
  const RelaxedProblem prob = testutil::build_problem(agents, eps);
  const SolveResult res = solve_centralized(prob, cfg);
  REQUIRE(res.solution.status == Status::Converged);

  BoundInputs in;
  in.epsilon = eps;
  in.modulus = modulus;
  in.lipschitz.resize(n_agents);
  Vector lo(p), hi(p);
  for (Index j = 0; j < p; ++j) {
    lo(j) = std::min(res.solution.x(j), x_star(j)) - 1e-6;
    hi(j) = std::max(res.solution.x(j), x_star(j)) + 1e-6;
  }
  for (Index i = 0; i < n_agents; ++i)
    in.lipschitz(i) = max_gradient_norm(
        objectives[static_cast<std::size_t>(i)], lo, hi);

  const double gap = averaged_objective(objectives, res.solution.x) -
                     averaged_objective(objectives, x_star);
  CHECK(gap <= suboptimality_bound(in) + 1e-9);
  CHECK((res.solution.x - x_star).squaredNorm() <=
        distance_bound(in) + 1e-9);
}
