#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "cipm/errors.hpp"
#include "cipm/families.hpp"

#include "helpers.hpp"

using namespace cipm;

namespace {

Vector fd_gradient(const std::function<double(const Vector&)>& f,
                   const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Index k = 0; k < x.size(); ++k) {
    Vector hi = x, lo = x;
    hi[k] += h;
    lo[k] -= h;
    g[k] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f,
                   const Vector& x, double h = 1e-6) {
  const Vector f0 = f(x);
  Matrix J(f0.size(), x.size());
  for (Index k = 0; k < x.size(); ++k) {
    Vector hi = x, lo = x;
    hi[k] += h;
    lo[k] -= h;
    J.col(k) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return J;
}

} // namespace

TEST_CASE("log1pexp and sigmoid stay finite and exact across the range") {
  CHECK(log1pexp(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(log1pexp(1.5) ==
        doctest::Approx(std::log(1.0 + std::exp(1.5))).epsilon(1e-14));
  CHECK(log1pexp(800.0) == doctest::Approx(800.0).epsilon(1e-15));
  CHECK(std::isfinite(log1pexp(800.0)));
  CHECK(log1pexp(-800.0) >= 0.0);
  CHECK(log1pexp(-800.0) < 1e-300);

  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(-800.0) < 1e-300);
  for (double z : {-3.0, -0.4, 0.7, 5.0})
    CHECK(sigmoid(z) + sigmoid(-z) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("huber_value matches both branches and their joint") {
  CHECK(huber_value(0.5, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(huber_value(1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(huber_value(2.0, 1.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(huber_value(-2.0, 1.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(huber_value(3.0, 0.5) == doctest::Approx(0.5 * (6.0 - 0.5)));

  // linear branch has slope exactly 2M
  CHECK(huber_value(3.0, 1.0) - huber_value(2.0, 1.0) ==
        doctest::Approx(2.0).epsilon(1e-15));

  // continuous through the kink
  const double h = 1e-8;
  CHECK(std::abs(huber_value(1.0 + h, 1.0) - huber_value(1.0 - h, 1.0)) <
        1e-7);

  CHECK_THROWS_AS(huber_value(1.0, 0.0), InvalidInputError);
  CHECK_THROWS_AS(huber_value(1.0, -2.0), InvalidInputError);
}

TEST_CASE("huber epigraph reproduces the penalty at its inner minimizer") {
  Rng rng(7);
  const Index n = 4, p = 3;
  const double m = 1.0;
  Matrix A(n, p);
  Vector y(n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < p; ++c) A(r, c) = rng.uniform(-1.0, 1.0);
    y(r) = rng.uniform(-3.0, 3.0);
  }
  HuberData data{A, y, m};
  LocalSubproblem sp = data.make_subproblem();
  CHECK(sp.extra_dim == 2 * n);
  CHECK(sp.ineq_count == 5 * n);

  Vector x(p);
  for (Index j = 0; j < p; ++j) x(j) = rng.uniform(-2.0, 2.0);
  const Vector r = A * x - y;

  Vector w(p + 2 * n);
  w.head(p) = x;
  double penalty = 0.0;
  for (Index j = 0; j < n; ++j) {
    const double mag = std::abs(r[j]);
    w[p + j] = std::min(mag, m);
    w[p + n + j] = std::max(mag - m, 0.0);
    penalty += huber_value(r[j], m);
  }
  CHECK(sp.value(w) == doctest::Approx(penalty).epsilon(1e-12));
  CHECK((sp.ineq_value(w).array() <= 1e-12).all());
}

TEST_CASE("huber epigraph minimum agrees with a brute-force grid") {
  Matrix A(1, 1);
  A << 1.0;
  Vector y(1);
  y << 0.3;
  HuberData data{A, y, 1.0};
  LocalSubproblem sp = data.make_subproblem();

  Vector x(1);
  x << 1.7; // residual 1.4, outside the quadratic band
  double best = std::numeric_limits<double>::infinity();
  for (double u = 0.0; u <= 1.0; u += 1e-3) {
    for (double v = 0.0; v <= 2.0; v += 1e-3) {
      if (u + v < 1.4) continue; // rows (a)/(b) infeasible
      best = std::min(best, u * u + 2.0 * v);
    }
  }
  CHECK(best == doctest::Approx(huber_value(1.4, 1.0)).epsilon(1e-2));

  Vector w(3);
  w << x[0], 1.0, 0.4;
  CHECK(sp.value(w) == doctest::Approx(huber_value(1.4, 1.0)).epsilon(1e-14));
}

TEST_CASE("huber constraint rows follow the documented order") {
  Matrix A(1, 1);
  A << 2.0;
  Vector y(1);
  y << 1.0;
  LocalSubproblem sp = HuberData{A, y, 1.0}.make_subproblem();

  Vector w(3);
  w << 0.5, 0.3, 0.4; // residual r = 0
  Vector g = sp.ineq_value(w);
  REQUIRE(g.size() == 5);
  CHECK(g[0] == doctest::Approx(-0.7).epsilon(1e-15)); //  r - u - v
  CHECK(g[1] == doctest::Approx(-0.7).epsilon(1e-15)); // -r - u - v
  CHECK(g[2] == doctest::Approx(-0.3).epsilon(1e-15)); // -u
  CHECK(g[3] == doctest::Approx(-0.7).epsilon(1e-15)); //  u - M
  CHECK(g[4] == doctest::Approx(-0.4).epsilon(1e-15)); // -v
}

TEST_CASE("huber evaluators agree with finite differences") {
  Rng rng(13);
  const Index n = 3, p = 2;
  Matrix A(n, p);
  Vector y(n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < p; ++c) A(r, c) = rng.uniform(-1.0, 1.0);
    y(r) = rng.uniform(-1.0, 1.0);
  }
  LocalSubproblem sp = HuberData{A, y, 1.0}.make_subproblem();

  Vector w(sp.dim());
  for (Index k = 0; k < w.size(); ++k) w(k) = rng.uniform(0.1, 0.9);

  CHECK((sp.gradient(w) - fd_gradient(sp.value, w)).norm() < 1e-6);
  CHECK((sp.ineq_jacobian(w) - fd_jacobian(sp.ineq_value, w)).norm() < 1e-6);
  CHECK((sp.hessian(w) - fd_jacobian(sp.gradient, w)).norm() < 1e-5);
}

TEST_CASE("huber consensus objective sums the row penalties") {
  Matrix A = Matrix::Identity(2, 2);
  Vector y(2);
  y << 0.0, 3.0;
  HuberData data{A, y, 1.0};
  ConsensusObjective f = data.make_objective();

  Vector x(2);
  x << 0.2, 0.0; // residuals 0.2 (quadratic) and -3 (linear)
  CHECK(f.value(x) ==
        doctest::Approx(huber_value(0.2, 1.0) + huber_value(-3.0, 1.0))
            .epsilon(1e-14));
  // both residuals sit far from the kink so the gradient is smooth here
  CHECK((f.gradient(x) - fd_gradient(f.value, x)).norm() < 1e-6);
}

TEST_CASE("logistic evaluators match a hand-computed scalar case") {
  Matrix phi(2, 1);
  phi << 1.0, -2.0;
  Vector y(2);
  y << 1.0, 0.0;
  LogisticData data{phi, y, 2.0, 4}; // reg = rho / N = 0.5
  LocalSubproblem sp = data.make_subproblem();
  CHECK(sp.extra_dim == 0);
  CHECK(sp.ineq_count == 0);

  Vector x(1);
  x << 0.3;
  const double z0 = 0.3, z1 = -0.6;
  const double want_value = std::log(1.0 + std::exp(z0)) - z0 +
                            std::log(1.0 + std::exp(z1)) +
                            0.5 * 0.3 * 0.3;
  CHECK(sp.value(x) == doctest::Approx(want_value).epsilon(1e-14));

  const double want_grad = (sigmoid(z0) - 1.0) - 2.0 * sigmoid(z1) +
                           2.0 * 0.5 * 0.3;
  CHECK(sp.gradient(x)[0] == doctest::Approx(want_grad).epsilon(1e-14));

  const double want_hess = sigmoid(z0) * (1.0 - sigmoid(z0)) +
                           4.0 * sigmoid(z1) * (1.0 - sigmoid(z1)) + 1.0;
  CHECK(sp.hessian(x)(0, 0) == doctest::Approx(want_hess).epsilon(1e-14));
}

TEST_CASE("logistic evaluators agree with finite differences") {
  Rng rng(17);
  auto agents = testutil::random_logistics(rng, 1, 3, 8);
  LocalSubproblem sp = agents[0].make_subproblem();
  ConsensusObjective f = agents[0].make_objective();

  Vector x(3);
  for (Index k = 0; k < 3; ++k) x(k) = rng.uniform(-1.0, 1.0);

  CHECK((sp.gradient(x) - fd_gradient(sp.value, x)).norm() < 1e-6);
  CHECK((sp.hessian(x) - fd_jacobian(sp.gradient, x)).norm() < 1e-5);
  CHECK(f.value(x) == sp.value(x));
  CHECK((f.gradient(x) - sp.gradient(x)).norm() == 0.0);
}

TEST_CASE("family data validation catches malformed inputs") {
  Matrix phi(2, 1);
  phi << 1.0, -1.0;
  Vector y(2);
  y << 1.0, 0.5; // not a binary label
  CHECK_THROWS_AS((LogisticData{phi, y, 1.0, 1}.make_subproblem()),
                  InvalidInputError);
  y << 1.0, 0.0;
  CHECK_THROWS_AS((LogisticData{phi, y, 0.0, 1}.make_subproblem()),
                  InvalidInputError);
  CHECK_THROWS_AS((LogisticData{phi, Vector::Zero(3), 1.0, 1}
                       .make_subproblem()),
                  DimensionError);

  Matrix A(2, 1);
  A << 1.0, 2.0;
  CHECK_THROWS_AS((HuberData{A, Vector::Zero(2), -1.0}.make_subproblem()),
                  InvalidInputError);
  CHECK_THROWS_AS((HuberData{A, Vector::Zero(3), 1.0}.make_subproblem()),
                  DimensionError);

  Matrix P(2, 2);
  P << 1.0, 0.5, 0.2, 1.0; // asymmetric
  CHECK_THROWS_AS((QuadraticData{P, Vector::Zero(2)}.make_subproblem()),
                  InvalidInputError);
  P << 1.0, 0.5, 0.5, 1.0;
  CHECK_THROWS_AS((QuadraticData{P, Vector::Zero(3)}.make_subproblem()),
                  DimensionError);
}

TEST_CASE("family instances dispatch on their tag") {
  Rng rng(19);
  auto quad = testutil::random_quadratics(rng, 1, 3)[0];
  auto hub = testutil::random_hubers(rng, 1, 4, 5)[0];
  auto log = testutil::random_logistics(rng, 1, 2, 6)[0];

  CHECK(quad.p() == 3);
  CHECK(hub.p() == 4);
  CHECK(log.p() == 2);
  CHECK(quad.make_subproblem().family == "quadratic");
  CHECK(hub.make_subproblem().family == "huber-rls");
  CHECK(log.make_subproblem().family == "logreg");

  FamilyInstance mismatched = quad;
  mismatched.family = "huber-rls";
  CHECK_THROWS_AS(mismatched.make_subproblem(), InvalidInputError);

  FamilyInstance doubled = quad;
  doubled.huber = hub.huber;
  CHECK_THROWS_AS(doubled.make_subproblem(), InvalidInputError);

  FamilyInstance empty;
  empty.family = "quadratic";
  CHECK_THROWS_AS(empty.p(), InvalidInputError);
  CHECK_THROWS_AS(empty.make_subproblem(), InvalidInputError);
}

TEST_CASE("family instances attach equality pairs over the stacked variable") {
  Rng rng(29);
  FamilyInstance fi = testutil::random_quadratics(rng, 1, 3)[0];
  fi.A = Matrix::Ones(1, 3);
  fi.b = Vector::Constant(1, 2.0);
  LocalSubproblem sp = fi.make_subproblem();
  CHECK(sp.eq_count == 1);
  CHECK((sp.A - fi.A).norm() == 0.0);
  CHECK(sp.b[0] == 2.0);

  FamilyInstance bad = fi;
  bad.A = Matrix::Ones(1, 2); // does not span dim() == 3
  bad.b = Vector::Zero(1);
  CHECK_THROWS_AS(bad.make_subproblem(), DimensionError);

  bad = fi;
  bad.b = Vector::Zero(2); // row-count mismatch
  CHECK_THROWS_AS(bad.make_subproblem(), DimensionError);
}
