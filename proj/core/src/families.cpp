#include "cipm/families.hpp"

#include <cmath>

#include "cipm/errors.hpp"

namespace cipm {

double log1pexp(double z) {
  // Both branches evaluate log(1 + e^z); picking the sign keeps the
  // exponent nonpositive so exp never overflows and log1p keeps small
  // results at full precision.
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double huber_value(double u, double half_width) {
  if (!(half_width > 0.0))
    throw InvalidInputError("huber_value: half width must be positive");
  const double a = std::abs(u);
  if (a <= half_width) return u * u;
  return half_width * (2.0 * a - half_width);
}

namespace {

double huber_derivative(double u, double m) {
  if (u > m) return 2.0 * m;
  if (u < -m) return -2.0 * m;
  return 2.0 * u;
}

void check_huber(const HuberData& d) {
  if (!(d.half_width > 0.0))
    throw InvalidInputError("huber: half width must be positive");
  if (d.A.rows() == 0 || d.A.cols() == 0)
    throw InvalidInputError("huber: empty data matrix");
  if (d.y.size() != d.A.rows())
    throw DimensionError("huber: y must have one entry per row of A");
}

} // namespace

LocalSubproblem HuberData::make_subproblem() const {
  check_huber(*this);
  const Index n = A.rows();
  const Index p = A.cols();
  const double m = half_width;
  const Matrix a = A;
  const Vector yy = y;

  LocalSubproblem sp;
  sp.family = "huber-rls";
  sp.p = p;
  sp.extra_dim = 2 * n;
  sp.ineq_count = 5 * n;
  sp.eq_count = 0;

  sp.value = [n, p, m](const Vector& w) {
    return w.segment(p, n).squaredNorm() + 2.0 * m * w.tail(n).sum();
  };
  sp.gradient = [n, p, m](const Vector& w) {
    Vector g = Vector::Zero(p + 2 * n);
    g.segment(p, n) = 2.0 * w.segment(p, n);
    g.tail(n).setConstant(2.0 * m);
    return g;
  };
  sp.hessian = [n, p](const Vector&) {
    Matrix h = Matrix::Zero(p + 2 * n, p + 2 * n);
    h.block(p, p, n, n) = 2.0 * Matrix::Identity(n, n);
    return h;
  };

  sp.ineq_value = [a, yy, n, p, m](const Vector& w) {
    const Vector r = a * w.head(p) - yy;
    const Vector u = w.segment(p, n);
    const Vector v = w.tail(n);
    Vector g(5 * n);
    g.segment(0, n) = r - u - v;
    g.segment(n, n) = -r - u - v;
    g.segment(2 * n, n) = -u;
    g.segment(3 * n, n) = u.array() - m;
    g.segment(4 * n, n) = -v;
    return g;
  };
  sp.ineq_jacobian = [a, n, p](const Vector&) {
    Matrix j = Matrix::Zero(5 * n, p + 2 * n);
    const Matrix eye = Matrix::Identity(n, n);
    j.block(0, 0, n, p) = a;
    j.block(0, p, n, n) = -eye;
    j.block(0, p + n, n, n) = -eye;
    j.block(n, 0, n, p) = -a;
    j.block(n, p, n, n) = -eye;
    j.block(n, p + n, n, n) = -eye;
    j.block(2 * n, p, n, n) = -eye;
    j.block(3 * n, p, n, n) = eye;
    j.block(4 * n, p + n, n, n) = -eye;
    return j;
  };
  // All rows of G are affine.
  sp.ineq_weighted_hessian = [n, p](const Vector&, const Vector&) {
    return Matrix::Zero(p + 2 * n, p + 2 * n).eval();
  };

  sp.initial_extra = [a, yy, n, p, m](const Vector& x) {
    const Vector r = a * x - yy;
    Vector t(2 * n);
    for (Index j = 0; j < n; ++j) {
      const double mag = std::abs(r[j]) + 1.0;
      const double u = std::min(0.5 * m, mag);
      t[j] = u;
      // Floor keeps block (e) strictly interior when m/2 >= |r| + 1.
      t[n + j] = std::max(mag - u, 0.5);
    }
    return t;
  };
  return sp;
}

ConsensusObjective HuberData::make_objective() const {
  check_huber(*this);
  const Matrix a = A;
  const Vector yy = y;
  const double m = half_width;
  ConsensusObjective f;
  f.value = [a, yy, m](const Vector& x) {
    const Vector r = a * x - yy;
    double total = 0.0;
    for (Index j = 0; j < r.size(); ++j) total += huber_value(r[j], m);
    return total;
  };
  f.gradient = [a, yy, m](const Vector& x) {
    const Vector r = a * x - yy;
    Vector d(r.size());
    for (Index j = 0; j < r.size(); ++j) d[j] = huber_derivative(r[j], m);
    return (a.transpose() * d).eval();
  };
  return f;
}

namespace {

void check_logistic(const LogisticData& d) {
  if (d.phi.rows() == 0 || d.phi.cols() == 0)
    throw InvalidInputError("logistic: empty design matrix");
  if (d.y.size() != d.phi.rows())
    throw DimensionError("logistic: label count must match row count");
  if (!(d.rho > 0.0))
    throw InvalidInputError("logistic: rho must be positive");
  if (d.agent_count <= 0)
    throw InvalidInputError("logistic: agent count must be positive");
  for (Index j = 0; j < d.y.size(); ++j)
    if (d.y[j] != 0.0 && d.y[j] != 1.0)
      throw InvalidInputError("logistic: labels must be 0 or 1");
}

} // namespace

LocalSubproblem LogisticData::make_subproblem() const {
  check_logistic(*this);
  const Matrix f = phi;
  const Vector yy = y;
  const double reg = rho / static_cast<double>(agent_count);
  const Index p = phi.cols();

  LocalSubproblem sp;
  sp.family = "logreg";
  sp.p = p;
  sp.extra_dim = 0;
  sp.ineq_count = 0;
  sp.eq_count = 0;

  sp.value = [f, yy, reg](const Vector& x) {
    const Vector z = f * x;
    double total = reg * x.squaredNorm();
    for (Index j = 0; j < z.size(); ++j)
      total += log1pexp(z[j]) - yy[j] * z[j];
    return total;
  };
  sp.gradient = [f, yy, reg](const Vector& x) {
    const Vector z = f * x;
    Vector s(z.size());
    for (Index j = 0; j < z.size(); ++j) s[j] = sigmoid(z[j]) - yy[j];
    return (f.transpose() * s + 2.0 * reg * x).eval();
  };
  sp.hessian = [f, reg, p](const Vector& x) {
    const Vector z = f * x;
    Vector w(z.size());
    for (Index j = 0; j < z.size(); ++j) {
      const double s = sigmoid(z[j]);
      w[j] = s * (1.0 - s);
    }
    Matrix h = f.transpose() * w.asDiagonal() * f;
    h += 2.0 * reg * Matrix::Identity(p, p);
    return h;
  };
  return sp;
}

ConsensusObjective LogisticData::make_objective() const {
  const LocalSubproblem sp = make_subproblem();
  return ConsensusObjective{sp.value, sp.gradient};
}

LocalSubproblem QuadraticData::make_subproblem() const {
  const Index p = P.rows();
  if (p == 0 || P.cols() != p)
    throw InvalidInputError("quadratic: P must be square and nonempty");
  if (q.size() != p)
    throw DimensionError("quadratic: q must match P");
  const double scale = 1.0 + P.cwiseAbs().maxCoeff();
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidInputError("quadratic: P must be symmetric");
  const Matrix pp = P;
  const Vector qq = q;

  LocalSubproblem sp;
  sp.family = "quadratic";
  sp.p = p;
  sp.value = [pp, qq](const Vector& x) {
    return 0.5 * x.dot(pp * x) + qq.dot(x);
  };
  sp.gradient = [pp, qq](const Vector& x) { return (pp * x + qq).eval(); };
  sp.hessian = [pp](const Vector&) { return pp; };
  return sp;
}

ConsensusObjective QuadraticData::make_objective() const {
  const LocalSubproblem sp = make_subproblem();
  return ConsensusObjective{sp.value, sp.gradient};
}

namespace {

int engaged_count(const FamilyInstance& fi) {
  return (fi.quadratic ? 1 : 0) + (fi.huber ? 1 : 0) + (fi.logistic ? 1 : 0);
}

} // namespace

Index FamilyInstance::p() const {
  if (quadratic) return quadratic->P.rows();
  if (huber) return huber->A.cols();
  if (logistic) return logistic->phi.cols();
  throw InvalidInputError("family instance carries no data");
}

LocalSubproblem FamilyInstance::make_subproblem() const {
  if (engaged_count(*this) != 1)
    throw InvalidInputError(
        "family instance must carry exactly one parameter set");
  LocalSubproblem sp;
  if (family == "quadratic" && quadratic) {
    sp = quadratic->make_subproblem();
  } else if (family == "huber-rls" && huber) {
    sp = huber->make_subproblem();
  } else if (family == "logreg" && logistic) {
    sp = logistic->make_subproblem();
  } else {
    throw InvalidInputError("family tag '" + family +
                            "' does not match the attached data");
  }
  if (A.rows() > 0) {
    if (A.cols() != sp.dim() || b.size() != A.rows())
      throw DimensionError(
          "equality pair does not span the agent's stacked variable");
    sp.A = A;
    sp.b = b;
    sp.eq_count = A.rows();
  }
  return sp;
}

ConsensusObjective FamilyInstance::make_objective() const {
  if (quadratic) return quadratic->make_objective();
  if (huber) return huber->make_objective();
  if (logistic) return logistic->make_objective();
  throw InvalidInputError("family instance carries no data");
}

} // namespace cipm
