#include "cipm/validate.hpp"

#include <cmath>
#include <limits>

#include "cipm/errors.hpp"

namespace cipm {

namespace {

double rel_gap(double fd, double analytic) {
  return std::abs(fd - analytic) / std::max(1.0, std::abs(analytic));
}

double step_for(double coord) {
  static const double base =
      std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, std::abs(coord));
}

} // namespace

ValidationReport validate_subproblem(const LocalSubproblem& sp,
                                     const Vector& point) {
  sp.check_wellformed();
  const Index dim = sp.dim();
  if (point.size() != dim)
    throw DimensionError("validate_subproblem: point has size " +
                         std::to_string(point.size()) + ", expected " +
                         std::to_string(dim));

  if (sp.ineq_count > 0) {
    const Vector g = sp.ineq_value(point);
    if (g.size() != sp.ineq_count)
      throw DimensionError("validate_subproblem: G returned " +
                           std::to_string(g.size()) + " rows, declared " +
                           std::to_string(sp.ineq_count));
    for (Index j = 0; j < g.size(); ++j)
      if (!(g[j] < 0.0))
        throw RejectedPointError(
            static_cast<int>(j),
            "validate_subproblem: G_" + std::to_string(j) + " = " +
                std::to_string(g[j]) + " at the trial point");
  }

  ValidationReport rep;

  const Vector grad = sp.gradient(point);
  const Matrix hess = sp.hessian(point);
  if (grad.size() != dim || hess.rows() != dim || hess.cols() != dim) {
    rep.dimensions_ok = false;
    rep.notes.push_back("objective derivative shapes do not match dim");
    return rep;
  }
  if (sp.eq_count > 0 &&
      (sp.A.rows() != sp.eq_count || sp.A.cols() != dim ||
       sp.b.size() != sp.eq_count)) {
    rep.dimensions_ok = false;
    rep.notes.push_back("equality pair shapes do not match declaration");
    return rep;
  }

  rep.symmetry_defect = (hess - hess.transpose()).cwiseAbs().maxCoeff();

  // Gradient of h against central differences of values.
  for (Index c = 0; c < dim; ++c) {
    const double h = step_for(point[c]);
    Vector lo = point, hi = point;
    lo[c] -= h;
    hi[c] += h;
    const double fd = (sp.value(hi) - sp.value(lo)) / (2.0 * h);
    rep.max_gradient_mismatch =
        std::max(rep.max_gradient_mismatch, rel_gap(fd, grad[c]));
  }

  // Hessian of h against central differences of gradients.
  for (Index c = 0; c < dim; ++c) {
    const double h = step_for(point[c]);
    Vector lo = point, hi = point;
    lo[c] -= h;
    hi[c] += h;
    const Vector col = (sp.gradient(hi) - sp.gradient(lo)) / (2.0 * h);
    for (Index r = 0; r < dim; ++r)
      rep.max_hessian_mismatch =
          std::max(rep.max_hessian_mismatch, rel_gap(col[r], hess(r, c)));
  }

  if (sp.ineq_count > 0) {
    const Matrix jac = sp.ineq_jacobian(point);
    if (jac.rows() != sp.ineq_count || jac.cols() != dim) {
      rep.dimensions_ok = false;
      rep.notes.push_back("inequality Jacobian shape mismatch");
      return rep;
    }
    for (Index c = 0; c < dim; ++c) {
      const double h = step_for(point[c]);
      Vector lo = point, hi = point;
      lo[c] -= h;
      hi[c] += h;
      const Vector col = (sp.ineq_value(hi) - sp.ineq_value(lo)) / (2.0 * h);
      for (Index j = 0; j < sp.ineq_count; ++j)
        rep.max_gradient_mismatch =
            std::max(rep.max_gradient_mismatch, rel_gap(col[j], jac(j, c)));
    }

    // Row curvature: probe the weighted sum with unit weights, one row at
    // a time, against central differences of Jacobian rows.
    std::vector<Matrix> row_hess;
    row_hess.reserve(static_cast<std::size_t>(sp.ineq_count));
    for (Index j = 0; j < sp.ineq_count; ++j) {
      Vector w = Vector::Zero(sp.ineq_count);
      w[j] = 1.0;
      row_hess.push_back(sp.ineq_weighted_hessian(point, w));
      const Matrix& hj = row_hess.back();
      if (hj.rows() != dim || hj.cols() != dim) {
        rep.dimensions_ok = false;
        rep.notes.push_back("weighted inequality Hessian shape mismatch");
        return rep;
      }
      rep.symmetry_defect = std::max(
          rep.symmetry_defect, (hj - hj.transpose()).cwiseAbs().maxCoeff());
    }
    for (Index c = 0; c < dim; ++c) {
      const double h = step_for(point[c]);
      Vector lo = point, hi = point;
      lo[c] -= h;
      hi[c] += h;
      const Matrix dj = (sp.ineq_jacobian(hi) - sp.ineq_jacobian(lo)) / (2.0 * h);
      for (Index j = 0; j < sp.ineq_count; ++j)
        for (Index r = 0; r < dim; ++r)
          rep.max_hessian_mismatch = std::max(
              rep.max_hessian_mismatch, rel_gap(dj(j, r), row_hess[j](r, c)));
    }
  }

  return rep;
}

} // namespace cipm
