#pragma once

#include <vector>

#include <Eigen/SparseCore>

#include "qlflow/coefficients.hpp"
#include "qlflow/domain_grid.hpp"

namespace qlflow {

/// Gradient regularization: |grad u|^{p-2} becomes (|grad u|^2 + eps^2)^{(p-2)/2}.
struct RegularizationParams {
  double eps = 0.0;

  /// 1e-6 * (extent / h), i.e. 1e-6 * resolution.
  static RegularizationParams defaults_for(const Grid& grid);
  /// Throws PreconditionError unless eps >= 0 and (eps > 0 or p == 2).
  void validate(double p) const;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Discrete energy
///   E_h(u) = sum_cells h^n (1/p) a(u_c) [(s_c + eps^2)^{p/2} - eps^p] - sum_nodes h^n F(u_i),
/// with s_c the cell's squared gradient (mean of its squared edge differences
/// per axis) and u_c the mean of the cell's corner values. Subtracting eps^p
/// makes E_h(0) = 0 and E_h independent of eps at p = 2.
double energy(const Field& u, const CoefficientModel& cm, const NonlinearityModel& nm,
              const RegularizationParams& reg);

/// Three-term weak form int a w grad u . grad phi + (1/p) int a'(u) |grad u|^p phi - int f(u) phi,
/// evaluated with the same cell quadrature as energy(); it is the exact
/// directional derivative of E_h.
double energy_directional_derivative(const Field& u, const Field& phi, const CoefficientModel& cm,
                                     const NonlinearityModel& nm, const RegularizationParams& reg);

/// Node-wise residual R = h^{-n} dE_h/du on interior nodes, zero elsewhere, so
/// that integrate(R * phi) equals the directional derivative for every discrete phi.
Field residual(const Field& u, const CoefficientModel& cm, const NonlinearityModel& nm,
               const RegularizationParams& reg);

struct HessianOptions {
  /// Drop the second derivative of the gradient weight in cells with
  /// |grad u| < eps when p < 2 (Picard-type linearization of the singular regime).
  bool freeze_singular = true;
};

/// Jacobian of residual() with respect to the interior unknowns.
SparseMatrix residual_jacobian(const Field& u, const CoefficientModel& cm, const NonlinearityModel& nm,
                               const RegularizationParams& reg, const HessianOptions& opts = {});

/// Linear diffusion matrix with weights a(u_c) w(s_c) frozen at u:
/// K_u v reproduces the diffusion part of residual() when v = u.
SparseMatrix frozen_diffusion_matrix(const Field& u, const CoefficientModel& cm, double p,
                                     const RegularizationParams& reg);

/// Lower-order term (a'(u)/p) |grad u|^p distributed to nodes, in residual units.
Field first_order_term(const Field& u, const CoefficientModel& cm, double p, const RegularizationParams& reg);

/// Regularized squared gradient per cell together with the cell's mean value.
struct CellSample {
  double s = 0.0;
  double mean = 0.0;
};
std::vector<CellSample> cell_samples(const Field& u);

}  // namespace qlflow
