#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qlflow/coefficients.hpp"
#include "qlflow/domain_grid.hpp"
#include "qlflow/linear_solve.hpp"
#include "qlflow/operators.hpp"

namespace qlflow {

enum class Scheme {
  /// (v - u)/dt + K_u v = -(a'(u)/p)|grad u|^p + f(u): diffusion weights frozen
  /// at u, lower-order and reaction terms explicit. One linear solve.
  semi_implicit,
  /// (v - u)/dt + residual(v) = 0 by damped Newton.
  implicit,
};

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct FlowConfig {
  double dt0 = 1e-3;
  double t_end = 1.0;
  Scheme scheme = Scheme::implicit;
  double newton_tol = 1e-10;
  int newton_max_iter = 30;
  double backtrack = 0.5;
  int snapshot_stride = 10;
  double dt_min = 1e-12;
  /// Upper bound for dt regrowth after rejections; 0 means dt0.
  double dt_max = 0.0;
  int grow_after = 5;
  double tol_E_rel = 1e-10;
  /// Abort with blow_up_suspected once max u exceeds this value.
  double blowup_ceiling = std::numeric_limits<double>::infinity();
  /// Stop early once max |u| drops below this value (0 disables).
  double vanish_floor = 0.0;
  bool use_f_hat = true;

  void validate() const;
};

struct Snapshot {
  double t = 0.0;
  /// ||u_t|| over the step that ended at t (0 at t = 0).
  double ut_l2 = 0.0;
  Field u;
};

struct Trajectory {
  double p = 2.0;
  double pstar = std::numeric_limits<double>::infinity();
  double tol_E_rel = 1e-10;
  std::vector<double> times;   ///< t_0 = 0, t_1, ...
  std::vector<double> energy;  ///< energy at each time
  std::vector<double> dt;      ///< accepted step sizes, one per step
  std::vector<double> ut_l2;   ///< ||(u_{k+1} - u_k)/dt_k||_{L2}, one per step
  std::vector<double> min_u;   ///< nodal min at each time
  std::vector<double> max_u;
  std::vector<Snapshot> snapshots;
  int rejected_steps = 0;
  bool aborted = false;
  bool blowup_suspected = false;
  bool vanished_early = false;
  std::string abort_reason;

  std::size_t steps() const { return dt.size(); }
  double t_end() const { return times.empty() ? 0.0 : times.back(); }
  double min_value() const;
  const Field& final_field() const { return snapshots.back().u; }
};

struct StepResult {
  Field v;
  bool accepted = false;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Owns the per-flow solver state; caches the factorization of the frozen
/// operator when it does not depend on the state (a constant, p = 2).
class FlowStepper {
public:
  FlowStepper(CoefficientModel cm, NonlinearityModel nm, RegularizationParams reg, Scheme scheme,
              double newton_tol = 1e-10, int newton_max_iter = 30);

  StepResult advance(const Field& u, double dt);

private:
  StepResult semi_implicit(const Field& u, double dt);
  StepResult implicit(const Field& u, double dt);

  CoefficientModel cm_;
  NonlinearityModel nm_;
  RegularizationParams reg_;
  Scheme scheme_;
  double tol_;
  int max_iter_;
  SymmetricSolver cached_;
  double cached_dt_ = -1.0;
  const Grid* cached_grid_ = nullptr;
};

/// One time step; Newton failure returns accepted = false with the last iterate.
StepResult step(const Field& u, double dt, const CoefficientModel& cm, const NonlinearityModel& nm,
                const RegularizationParams& reg, Scheme scheme, double newton_tol = 1e-10,
                int newton_max_iter = 30);

/// Advances to t_end with dt backtracking whenever Newton fails or a step
/// breaks the per-step energy inequality E(v) + dt ||u_t||^2 <= E(u) + tol_E.
/// Uses the zero extension of f when cfg.use_f_hat.
Trajectory run_flow(const Field& u0, const FlowConfig& cfg, const CoefficientModel& cm,
                    const NonlinearityModel& nm, const RegularizationParams& reg);

struct EnergyReport {
  std::vector<double> times;
  std::vector<double> energy;
  std::vector<double> dissipation;  ///< cumulative sum of dt * ut_l2^2
  double max_positive_jump = 0.0;
  double max_violation = 0.0;  ///< max over s < t of E(t) + D(s,t) - E(s)
  double tolerance = 0.0;
  bool passes = false;
};

EnergyReport verify_energy_inequality(const Trajectory& tr);

enum class OmegaVerdict { vanished, nontrivial, undecided };
std::string to_string(OmegaVerdict v);

struct OmegaLimitReport {
  std::vector<double> sampled_times;
  Field z;
  std::vector<double> metrics;  ///< W^{1,p} distance of each earlier sample to z
  double z_norm = 0.0;
  double vanish_tol = 0.0;
  OmegaVerdict verdict = OmegaVerdict::undecided;
};

/// In each window [tau_j, tau_j + 1] picks the snapshot with the smallest
/// ||u_t||; z is the pick of the last window.
OmegaLimitReport sample_omega_limit(const Trajectory& tr, const std::vector<double>& tau_list);

/// sup ||u(t) - u(t + mu)||_{L^q} over snapshot pairs with t in the last
/// quarter of the run and 0 < mu <= mu0.
double check_time_equicontinuity(const Trajectory& tr, double mu0, double q);

}  // namespace qlflow
