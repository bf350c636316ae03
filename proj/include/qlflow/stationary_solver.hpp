#pragma once

#include <string>
#include <vector>

#include "qlflow/coefficients.hpp"
#include "qlflow/domain_grid.hpp"
#include "qlflow/operators.hpp"

namespace qlflow {

struct StationaryOptions {
  double tol = 1e-8;  ///< residual L2 tolerance at the target eps
  int max_iter = 200;
  int eps_stages = 4;
  double eps_start = 1e-2;
  bool clip_negative = true;
  bool allow_descent = true;
};

struct StationaryResult {
  Field z;
  double residual_norm = 0.0;
  int iterations = 0;
  int descent_steps = 0;
  std::vector<double> eps_path;
  bool converged = false;
  std::string message;
};

/// Damped Newton on the residual with a geometric eps continuation towards
/// reg.eps (skipped at p = 2). Falls back to energy descent when the residual
/// line search stalls. A zero guess with f(0) > 0 is replaced by the linear
/// solve -Laplace(u) = f(0).
StationaryResult solve_stationary(const Field& guess, const CoefficientModel& cm, const NonlinearityModel& nm,
                                  const RegularizationParams& reg, const StationaryOptions& opts = {});

/// Residual L2 norm from a fresh evaluation. Throws BoundaryViolation when z
/// is nonzero off the interior.
double verify_stationary(const Field& z, const CoefficientModel& cm, const NonlinearityModel& nm,
                         const RegularizationParams& reg);

/// u(r) = ((p-1)/p) (1/2)^{1/(p-1)} (R^{p/(p-1)} - r^{p/(p-1)}): solves
/// -Laplace_p u = 1 on the disk of radius R in the plane.
Field exact_p_torsion(const GridPtr& grid, double p);

}  // namespace qlflow
