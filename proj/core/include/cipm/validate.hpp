#pragma once

#include <string>
#include <vector>

#include "cipm/problem.hpp"

namespace cipm {

/// Outcome of a finite-difference audit of one subproblem's evaluators.
/// Mismatches are relative: |fd - analytic| / max(1, |analytic|).
struct ValidationReport {
  double max_gradient_mismatch = 0.0; // over h and every row of G
  double max_hessian_mismatch = 0.0;
  double symmetry_defect = 0.0;       // max asymmetry of reported Hessians
  bool dimensions_ok = true;
  std::vector<std::string> notes;

  bool pass(double grad_tol = 1e-5, double hess_tol = 1e-4,
            double sym_tol = 1e-12) const {
    return dimensions_ok && max_gradient_mismatch <= grad_tol &&
           max_hessian_mismatch <= hess_tol && symmetry_defect <= sym_tol;
  }
};

/// Central-difference check of gradient/Hessian/Jacobian consistency at
/// `point` (size dim). Steps are cbrt(machine eps) * max(1, |coord|) per
/// coordinate. Throws RejectedPointError when `point` is not strictly
/// feasible for some G component; evaluator audits only make sense where
/// the solver can actually stand.
ValidationReport validate_subproblem(const LocalSubproblem& sp,
                                     const Vector& point);

} // namespace cipm
