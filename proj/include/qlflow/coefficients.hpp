#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace qlflow {

using ScalarFn = std::function<double(double)>;

/// Diffusivity a(s) of the quasilinear operator together with its first two
/// derivatives and the structural constants used by the hypothesis checks.
struct CoefficientModel {
  std::string name;
  ScalarFn a;
  ScalarFn a1;
  ScalarFn a2;
  double eta = 1.0;  ///< ellipticity floor, a(s) >= eta
  double cap = 1.0;  ///< uniform bound on |a| and |a'|
  double rho = 0.0;  ///< sign condition a'(s)s >= 0 is required for |s| >= rho
  bool constant = false;  ///< a' == 0 identically; enables frozen-operator caching
};

/// Reaction term f with derivative and antiderivative F(s) = int_0^s f.
struct NonlinearityModel {
  std::string name;
  ScalarFn f;
  ScalarFn f1;
  ScalarFn bigF;
  double sigma = 1.0;  ///< growth exponent
  double c1 = 0.0;
  double c2 = 0.0;
  int n = 2;
  double p = 2.0;
  double pstar = std::numeric_limits<double>::infinity();
  bool zero_extended = false;
};

/// Sobolev exponent np/(n-p); +infinity when p >= n.
double sobolev_exponent(int n, double p);

struct HypothesisWitness {
  std::string condition;
  double sample = 0.0;
  double residual = 0.0;
};

/// Each flag is empty when the corresponding condition was not checked.
struct HypothesisReport {
  std::optional<bool> ellipticity_ok;
  std::optional<bool> bounded_ok;
  std::optional<bool> sign_condition_ok;
  std::optional<bool> growth_ok;
  std::optional<bool> positivity_ok;
  std::optional<bool> superlinearity_ok;
  std::optional<bool> H_monotone_ok;
  std::vector<HypothesisWitness> witnesses;
  /// (s, H(s)) pairs filled by check_uniqueness_conditions.
  std::vector<std::pair<double, double>> h_values;

  /// True when every checked flag holds.
  bool all_ok() const;
  bool has_witness(const std::string& condition) const;
};

struct HypothesisOptions {
  double tol_h_rel = 1e-8;  ///< tol_H = tol_h_rel * (1 + |H|)
};

/// Samples [0, s_max] uniformly (endpoints included) and checks ellipticity,
/// the bound (eta <= a <= cap, |a'| <= cap), the sign condition for s >= rho,
/// the growth bound with its exponent window, and strict positivity of f.
/// Throws EvaluationError at the first non-finite function value.
HypothesisReport check_structural_hypotheses(const CoefficientModel& cm, const NonlinearityModel& nm,
                                             double s_max, int samples);

/// Superlinearity (p-1) f(s) < s f'(s) and monotone nonincrease of
/// H(s) = (n-p) s - n p F(s) / f(s). Throws EvaluationError when f vanishes
/// at a sample in (0, s_max].
HypothesisReport check_uniqueness_conditions(const NonlinearityModel& nm, double s_max, int samples,
                                             const HypothesisOptions& opts = {});

/// Zero extension of f to negative arguments; F becomes constant (0) there.
NonlinearityModel extend_f_hat(const NonlinearityModel& nm);

// Catalogue --------------------------------------------------------------

/// "const" (a == 1) or "quadratic" (a = 1 + s^2).
CoefficientModel make_coefficient(const std::string& name, double cap = 100.0, double rho = 0.0);

/// "zero", "power:q", "critical" (q = p* - 1, requires p < n) and
/// "constant:c" (f == c, the torsion load).
NonlinearityModel make_nonlinearity(const std::string& name, int n, double p);

/// Power nonlinearity f(s) = s^q for s >= 0.
NonlinearityModel power_nonlinearity(double q, int n, double p);

}  // namespace qlflow
