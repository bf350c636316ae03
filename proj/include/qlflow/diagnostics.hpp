#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qlflow/domain_grid.hpp"

namespace qlflow {

struct SymmetryReport {
  double asymmetry_x1 = 0.0;  ///< ||u - u_0||_{L2} / ||u||_{L2}
  /// Largest value spread among nodes at equal lattice radius, over ||u||_inf.
  /// Fringe nodes next to the staircase boundary are left out. Absent on
  /// non-disk domains.
  std::optional<double> radial_deviation;
  /// max over x1 < 0 of (-du/dx1)^+, over max |grad u|.
  double monotonicity_defect = 0.0;
};

SymmetryReport symmetry_report(const Field& u);

struct MovingPlaneReport {
  std::vector<double> lambdas;
  std::vector<double> defects;  ///< max over x1 < lambda of (u - u_lambda)^+
  double overall_max = 0.0;
};

/// lambda runs over lambda_count abscissae in [x_lo/2, 0], snapped to
/// multiples of h/2 so that reflections land on lattice nodes.
MovingPlaneReport moving_plane_sweep(const Field& u, int lambda_count);

struct CriticalSetReport {
  std::vector<double> deltas;
  std::vector<double> fractions;  ///< |{|grad u| < delta}| / |Omega|
  /// int |grad u|^{-(p-1) r} |x - y|^{-gamma} per y sample.
  std::vector<double> inverse_gradient_by_y;
  double inverse_gradient_integral = 0.0;  ///< max over y
  /// int |grad u|^{p-2-beta} |D^2 u|^2 |x - y|^{-gamma} per y sample.
  std::vector<double> hessian_by_y;
  double hessian_integral = 0.0;  ///< max over y
  double p = 2.0, r_exp = 0.5, beta = 0.0, gamma = 0.0;
  std::vector<std::pair<double, double>> y_samples;

  /// max / min of the inverse-gradient integral over the y samples.
  double y_stability_ratio() const;
};

/// Critical-node measure fractions and the two gradient-weighted integrals.
/// Nodes with |grad u| = 0 are excluded from the integrals; the Hessian
/// integral also skips the fringe (nodes without a full 3x3 interior stencil).
/// gamma must be 0 when n <= 2. Throws DegenerateFieldError if grad u == 0.
CriticalSetReport critical_set_report(const Field& u, double p, const std::vector<double>& deltas, double r_exp,
                                      double beta, double gamma,
                                      const std::vector<std::pair<double, double>>& y_samples);

/// max over test fields v of ||v||_{L2} / ||grad v||_{L2(rho)} with
/// rho = |grad u_weight|^{p-2} per cell. Trial 0 is the lowest sine mode of the
/// bounding box; the others are seeded random sine combinations.
double weighted_poincare_constant(const Field& u_weight, double p, int trials, std::uint64_t seed = 1);

/// Rayleigh ratio ||v|| / ||grad v||_{L2(rho)} of a single test field.
double weighted_rayleigh_ratio(const Field& v, const Field& u_weight, double p);

struct ComparisonOptions {
  double theta_fraction = 0.1;  ///< theta = theta_fraction * |Omega|
  double stationarity_tol = 1e-6;
  std::optional<double> u_residual;  ///< stationarity residuals, when known
  std::optional<double> v_residual;
};

struct ComparisonReport {
  double subdomain_measure = 0.0;
  double theta = 0.0;
  bool boundary_ordered = false;
  bool small_domain = false;
  bool verified_stationary = false;
  bool applicable = false;
  double interior_violation = 0.0;  ///< max over the mask of (u - v)^+
  bool passes = false;
  std::string note;
};

/// mask: one flag per node, set on a 4-connected set of interior nodes.
ComparisonReport comparison_experiment(const Field& u, const Field& v, const std::vector<char>& mask,
                                       const ComparisonOptions& opts = {});

/// Interior nodes within distance radius of (cx, cy).
std::vector<char> ball_mask(const Grid& grid, double cx, double cy, double radius);

}  // namespace qlflow
