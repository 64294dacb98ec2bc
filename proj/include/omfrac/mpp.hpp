#pragma once

#include <string>
#include <vector>

#include "omfrac/om.hpp"

// Most probable transition path: direct minimization of -J over paths from
// x0 to x1, with the standard-case Euler-Lagrange residual as an independent
// optimality certificate.

namespace omfrac {

struct OptimizerConfig {
  int max_iters = 4000;
  double grad_tol = 1e-8;
  double boundary_tol = 1e-6;
  double rho0 = 10.0;        // initial terminal penalty weight
  int max_penalty_rounds = 24;
};

struct MPPProblem {
  double x0 = -1.0;
  double x1 = 1.0;
  DriftSpec drift;
  NoiseModel noise;
  GridPtr grid;
  OptimizerConfig opt;
};

struct MPPResult {
  SampledPath phi;
  SampledPath phi_dot;   // control (fractional regimes); sigma^{-1} phi' otherwise
  double J = 0.0;
  double boundary_gap = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Direct minimization of -J. Standard regime: interior node values with both
// endpoints pinned (interval collocation of the kinetic term). Fractional
// regimes: control u with phi = x0 + K_H^sigma u and an escalating quadratic
// terminal penalty. Multistart from a constant control scaled to hit x1, the
// zero control, and a tanh ramp; highest J wins.
MPPResult solve_mpp(const MPPProblem& problem);

// r(s) = 2 (d/ds + db_dx(phi)) [ (phi' - b(phi)) / sigma^2 ] - d2b_dx2(phi).
SampledPath el_residual_standard(const SampledPath& phi, const DriftSpec& drift,
                                 const NoiseModel& noise);

// Fractional first-order condition residual (diagnostic):
// 2 (d/ds + db_dx(phi)) [ sigma^{-1} R(phi_dot - image) ] - d_H d2b_dx2(phi),
// R the right-sided weighted composite adjoint to the drift-image operator.
SampledPath el_residual_fractional(const SampledPath& phi_dot, double x0,
                                   const DriftSpec& drift,
                                   const NoiseModel& noise);

// CSV "t,phi" plus JSON diagnostics.
void export_mpp_result(const MPPResult& result, const std::string& csv_path,
                       const std::string& json_path);

}  // namespace omfrac
