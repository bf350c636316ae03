#include "qlflow/parabolic_flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qlflow/errors.hpp"

namespace qlflow {

namespace {

double l2_interior(const Eigen::VectorXd& v, double cell) { return std::sqrt(v.squaredNorm() * cell); }

Eigen::VectorXd residual_vector(const Field& u, const CoefficientModel& cm, const NonlinearityModel& nm,
                                const RegularizationParams& reg) {
  return residual(u, cm, nm, reg).interior_vector();
}

}  // namespace

std::string to_string(Scheme s) { return s == Scheme::implicit ? "implicit" : "semi_implicit"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "implicit") return Scheme::implicit;
  if (s == "semi_implicit") return Scheme::semi_implicit;
  throw ConfigError("unknown scheme '" + s + "'");
}

std::string to_string(OmegaVerdict v) {
  switch (v) {
    case OmegaVerdict::vanished: return "vanished";
    case OmegaVerdict::nontrivial: return "nontrivial";
    case OmegaVerdict::undecided: return "undecided";
  }
  return "undecided";
}

void FlowConfig::validate() const {
  if (!(dt0 > 0.0)) throw ConfigError("dt0 must be positive");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("backtracking factor must lie in (0,1)");
  if (snapshot_stride < 1) throw ConfigError("snapshot stride must be at least 1");
  if (!(newton_tol > 0.0) || newton_max_iter < 1) throw ConfigError("bad Newton controls");
  if (!(dt_min > 0.0)) throw ConfigError("dt_min must be positive");
}

double Trajectory::min_value() const {
  return min_u.empty() ? 0.0 : *std::min_element(min_u.begin(), min_u.end());
}

// Stepping ---------------------------------------------------------------------

FlowStepper::FlowStepper(CoefficientModel cm, NonlinearityModel nm, RegularizationParams reg, Scheme scheme,
                         double newton_tol, int newton_max_iter)
    : cm_(std::move(cm)), nm_(std::move(nm)), reg_(reg), scheme_(scheme), tol_(newton_tol),
      max_iter_(newton_max_iter) {
  reg_.validate(nm_.p);
}

StepResult FlowStepper::advance(const Field& u, double dt) {
  if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
  return scheme_ == Scheme::implicit ? implicit(u, dt) : semi_implicit(u, dt);
}

StepResult FlowStepper::semi_implicit(const Field& u, double dt) {
  const Grid& g = u.grid();
  const bool state_free = cm_.constant && nm_.p == 2.0;
  const bool reuse = state_free && cached_dt_ == dt && cached_grid_ == &g;

  SymmetricSolver fresh;
  SymmetricSolver* solver = reuse ? &cached_ : &fresh;
  if (!reuse) {
    SparseMatrix A = frozen_diffusion_matrix(u, cm_, nm_.p, reg_);
    for (int k = 0; k < A.rows(); ++k) A.coeffRef(k, k) += 1.0 / dt;
    if (!solver->factorize(A)) return {u, false, std::numeric_limits<double>::infinity(), 1};
    if (state_free) {
      cached_ = std::move(fresh);
      solver = &cached_;
      cached_dt_ = dt;
      cached_grid_ = &g;
    }
  }

  Eigen::VectorXd rhs = u.interior_vector() / dt;
  if (!cm_.constant) rhs -= first_order_term(u, cm_, nm_.p, reg_).interior_vector();
  const auto& nodes = g.interior_nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) rhs[static_cast<Eigen::Index>(k)] += nm_.f(u[nodes[k]]);

  Eigen::VectorXd v = solver->solve(rhs);
  if (!v.allFinite()) return {u, false, std::numeric_limits<double>::infinity(), 1};
  return {Field::from_interior(u.grid_ptr(), v), true, 0.0, 1};
}

StepResult FlowStepper::implicit(const Field& u, double dt) {
  const Grid& g = u.grid();
  const double cell = g.cell_measure();
  const Eigen::VectorXd u_vec = u.interior_vector();
  const double scale = 1.0 + l2_interior(u_vec, cell) / dt;

  Field v = u;
  Eigen::VectorXd v_vec = u_vec;
  auto G_of = [&](const Field& w, const Eigen::VectorXd& w_vec) {
    return Eigen::VectorXd((w_vec - u_vec) / dt + residual_vector(w, cm_, nm_, reg_));
  };
  Eigen::VectorXd G = G_of(v, v_vec);
  double gnorm = l2_interior(G, cell);

  for (int it = 1; it <= max_iter_; ++it) {
    if (!std::isfinite(gnorm)) break;
    if (gnorm <= tol_ * scale) return {v, true, gnorm, it - 1};

    SparseMatrix J = residual_jacobian(v, cm_, nm_, reg_);
    for (int k = 0; k < J.rows(); ++k) J.coeffRef(k, k) += 1.0 / dt;
    SymmetricSolver solver;
    if (!solver.factorize(J)) break;
    const Eigen::VectorXd delta = -solver.solve(G);
    if (!delta.allFinite()) break;

    double alpha = 1.0;
    Eigen::VectorXd trial_vec;
    Field trial;
    Eigen::VectorXd trial_G;
    double trial_norm = 0.0;
    for (;;) {
      trial_vec = v_vec + alpha * delta;
      trial = Field::from_interior(u.grid_ptr(), trial_vec);
      trial_G = G_of(trial, trial_vec);
      trial_norm = l2_interior(trial_G, cell);
      if (std::isfinite(trial_norm) && trial_norm <= (1.0 - 1e-4 * alpha) * gnorm) break;
      if (alpha < 1.0 / 64.0) break;
      alpha *= 0.5;
    }
    const double step_inf = alpha * delta.lpNorm<Eigen::Infinity>();
    v = std::move(trial);
    v_vec = std::move(trial_vec);
    G = std::move(trial_G);
    gnorm = trial_norm;
    if (std::isfinite(gnorm) && step_inf <= tol_ * (1.0 + v_vec.lpNorm<Eigen::Infinity>()))
      return {v, true, gnorm, it};
  }
  return {v, false, gnorm, max_iter_};
}

StepResult step(const Field& u, double dt, const CoefficientModel& cm, const NonlinearityModel& nm,
                const RegularizationParams& reg, Scheme scheme, double newton_tol, int newton_max_iter) {
  FlowStepper stepper(cm, nm, reg, scheme, newton_tol, newton_max_iter);
  return stepper.advance(u, dt);
}

// Flow driver ------------------------------------------------------------------

Trajectory run_flow(const Field& u0, const FlowConfig& cfg, const CoefficientModel& cm,
                    const NonlinearityModel& nm, const RegularizationParams& reg) {
  cfg.validate();
  reg.validate(nm.p);
  if (u0.min_interior() < 0.0) throw PreconditionError("initial datum must be nonnegative");
  const auto hyp = check_structural_hypotheses(cm, nm, std::max(1.0, 2.0 * u0.max_abs()), 64);
  if (!hyp.ellipticity_ok.value_or(false)) throw PreconditionError("diffusivity fails the ellipticity hypothesis");

  const NonlinearityModel model = cfg.use_f_hat ? extend_f_hat(nm) : nm;
  FlowStepper stepper(cm, model, reg, cfg.scheme, cfg.newton_tol, cfg.newton_max_iter);
  const double cell = u0.grid().cell_measure();
  const double dt_max = cfg.dt_max > 0.0 ? cfg.dt_max : cfg.dt0;

  Trajectory tr;
  tr.p = nm.p;
  tr.pstar = nm.pstar;
  tr.tol_E_rel = cfg.tol_E_rel;

  Field u = u0;
  double t = 0.0;
  double E = energy(u, cm, model, reg);
  auto record_state = [&](const Field& w, double time, double e) {
    tr.times.push_back(time);
    tr.energy.push_back(e);
    tr.min_u.push_back(w.min_interior());
    tr.max_u.push_back(w.max_interior());
  };
  record_state(u, t, E);
  tr.snapshots.push_back({0.0, 0.0, u});

  double dt = cfg.dt0;
  int streak = 0;
  const double t_stop = cfg.t_end * (1.0 - 1e-12);
  while (t < t_stop) {
    const double dt_try = std::min(dt, cfg.t_end - t);
    StepResult res = stepper.advance(u, dt_try);

    bool ok = res.accepted;
    double E_new = 0.0, ut = 0.0;
    if (ok && !res.v.all_finite()) {
      tr.aborted = tr.blowup_suspected = true;
      tr.abort_reason = "non-finite state";
      break;
    }
    if (ok) {
      E_new = energy(res.v, cm, model, reg);
      const Eigen::VectorXd d = res.v.interior_vector() - u.interior_vector();
      ut = l2_interior(d, cell) / dt_try;
      const double tol_E = cfg.tol_E_rel * (1.0 + std::abs(E));
      ok = std::isfinite(E_new) && E_new + dt_try * ut * ut <= E + tol_E;
    }
    if (!ok) {
      ++tr.rejected_steps;
      streak = 0;
      dt = dt_try * cfg.backtrack;
      if (dt < cfg.dt_min) {
        tr.aborted = true;
        std::ostringstream msg;
        msg << "dt underflow at t = " << t;
        tr.abort_reason = msg.str();
        break;
      }
      continue;
    }

    u = std::move(res.v);
    t += dt_try;
    E = E_new;
    tr.dt.push_back(dt_try);
    tr.ut_l2.push_back(ut);
    record_state(u, t, E);

    const bool finished = t >= t_stop;
    const bool blowup = tr.max_u.back() > cfg.blowup_ceiling;
    const bool vanished = cfg.vanish_floor > 0.0 && u.max_abs() < cfg.vanish_floor;
    if (tr.steps() % static_cast<std::size_t>(cfg.snapshot_stride) == 0 || finished || blowup || vanished)
      tr.snapshots.push_back({t, ut, u});
    if (blowup) {
      tr.aborted = tr.blowup_suspected = true;
      tr.abort_reason = "blow-up suspected: max u above ceiling";
      break;
    }
    if (vanished) {
      tr.vanished_early = true;
      break;
    }
    if (++streak >= cfg.grow_after && dt < dt_max) {
      dt = std::min(dt / cfg.backtrack, dt_max);
      streak = 0;
    }
  }
  return tr;
}

// Post-processing ----------------------------------------------------------------

EnergyReport verify_energy_inequality(const Trajectory& tr) {
  if (tr.times.empty()) throw PreconditionError("empty trajectory");
  EnergyReport rep;
  rep.times = tr.times;
  rep.energy = tr.energy;
  rep.dissipation.assign(tr.times.size(), 0.0);
  for (std::size_t k = 0; k < tr.steps(); ++k)
    rep.dissipation[k + 1] = rep.dissipation[k] + tr.dt[k] * tr.ut_l2[k] * tr.ut_l2[k];

  double emax = 0.0;
  for (double e : tr.energy) emax = std::max(emax, std::abs(e));

  // max over s < t of (E_t + D_t) - (E_s + D_s) via a running minimum.
  double running_min = tr.energy[0] + rep.dissipation[0];
  for (std::size_t k = 1; k < tr.times.size(); ++k) {
    const double g = tr.energy[k] + rep.dissipation[k];
    rep.max_violation = std::max(rep.max_violation, g - running_min);
    running_min = std::min(running_min, g);
    rep.max_positive_jump = std::max(rep.max_positive_jump, tr.energy[k] - tr.energy[k - 1]);
  }
  rep.tolerance = tr.tol_E_rel * (1.0 + emax) * static_cast<double>(std::max<std::size_t>(tr.steps(), 1));
  rep.passes = rep.max_violation <= rep.tolerance;
  return rep;
}

OmegaLimitReport sample_omega_limit(const Trajectory& tr, const std::vector<double>& tau_list) {
  if (tr.snapshots.empty()) throw PreconditionError("trajectory has no snapshots");
  if (tau_list.empty()) throw PreconditionError("need at least one sampling window");
  const double t_end = tr.t_end();
  const double slack = 1e-9 * std::max(1.0, t_end);

  OmegaLimitReport rep;
  std::vector<const Snapshot*> picks;
  for (double tau : tau_list) {
    if (tau + 1.0 > t_end + slack) {
      std::ostringstream msg;
      msg << "window [" << tau << ", " << tau + 1.0 << "] exceeds the run horizon " << t_end;
      throw PreconditionError(msg.str());
    }
    const Snapshot* best = nullptr;
    for (const Snapshot& s : tr.snapshots) {
      if (s.t < tau - slack || s.t > tau + 1.0 + slack) continue;
      if (!best || s.ut_l2 < best->ut_l2) best = &s;
    }
    if (!best) {
      std::ostringstream msg;
      msg << "no snapshot in window [" << tau << ", " << tau + 1.0 << "]";
      throw ConfigError(msg.str());
    }
    picks.push_back(best);
    rep.sampled_times.push_back(best->t);
  }

  rep.z = picks.back()->u;
  const double p = tr.p;
  for (std::size_t j = 0; j + 1 < picks.size(); ++j) rep.metrics.push_back(distance_W1p(picks[j]->u, rep.z, p));
  rep.z_norm = norm_W1p(rep.z, p);
  rep.vanish_tol = 1e-3 * norm_W1p(tr.snapshots.front().u, p);

  if (rep.z_norm <= rep.vanish_tol) {
    rep.verdict = OmegaVerdict::vanished;
  } else {
    bool decreasing = !rep.metrics.empty();
    for (std::size_t j = 1; j < rep.metrics.size(); ++j)
      if (rep.metrics[j] > 1.1 * rep.metrics[j - 1]) decreasing = false;
    rep.verdict = decreasing ? OmegaVerdict::nontrivial : OmegaVerdict::undecided;
  }
  return rep;
}

double check_time_equicontinuity(const Trajectory& tr, double mu0, double q) {
  if (!(q >= 1.0) || !(q < tr.pstar)) throw PreconditionError("q must lie in [1, p*)");
  if (mu0 < 0.0) throw PreconditionError("mu0 must be nonnegative");
  if (mu0 == 0.0) return 0.0;
  const double t_end = tr.t_end();
  const double t_from = 0.75 * t_end;
  double sup = 0.0;
  const auto& snaps = tr.snapshots;
  for (std::size_t a = 0; a < snaps.size(); ++a) {
    if (snaps[a].t < t_from) continue;
    for (std::size_t b = a + 1; b < snaps.size(); ++b) {
      const double mu = snaps[b].t - snaps[a].t;
      if (mu > mu0 * (1.0 + 1e-12)) break;
      sup = std::max(sup, lp_norm(snaps[a].u - snaps[b].u, q));
    }
  }
  return sup;
}

}  // namespace qlflow
