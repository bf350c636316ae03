#include "qlflow/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "qlflow/coefficients.hpp"
#include "qlflow/diagnostics.hpp"
#include "qlflow/errors.hpp"
#include "qlflow/operators.hpp"
#include "qlflow/stationary_solver.hpp"
#include "qlflow/threshold.hpp"

namespace qlflow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSymTol = 5e-3;
constexpr double kCrossTol = 1e-3;

std::string label_num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

struct Models {
  GridPtr grid;
  CoefficientModel cm;
  NonlinearityModel nm;
  RegularizationParams reg;
};

Models models_for(const ExperimentConfig& cfg, const std::string& nonlinearity, double p, int resolution) {
  Models m;
  m.grid = build_grid(cfg.domain, resolution);
  m.cm = make_coefficient(cfg.coefficient, cfg.cap, cfg.rho);
  m.nm = make_nonlinearity(nonlinearity, cfg.n(), p);
  m.reg = cfg.eps ? RegularizationParams{*cfg.eps} : RegularizationParams::defaults_for(*m.grid);
  return m;
}

Models models_for(const ExperimentConfig& cfg) { return models_for(cfg, cfg.nonlinearity, cfg.p, cfg.resolution); }

// Initial profiles ---------------------------------------------------------------

Field sine_profile(const GridPtr& g) {
  const Domain& d = g->domain();
  const double L = d.extent();
  return Field::sample(g, [&](double x, double y) {
    double v = std::sin(kPi * (x - d.x_lo) / L);
    if (d.kind == DomainKind::rectangle) v *= std::sin(kPi * (y - d.y_lo) / (d.y_hi - d.y_lo));
    return v;
  });
}

Field radial_profile(const GridPtr& g) {
  const double R = g->domain().radius;
  return Field::sample(g, [&](double x, double y) { return 1.0 - (x * x + y * y) / (R * R); });
}

Field radial_profile_b(const GridPtr& g) {
  const double R = g->domain().radius;
  return Field::sample(g, [&](double x, double y) {
    const double r = std::hypot(x, y) / R;
    return std::cos(0.5 * kPi * r) * (1.0 + 2.0 * r * r);
  });
}

Field asymmetric_bump(const GridPtr& g) {
  const double R = g->domain().radius;
  return Field::sample(g, [&](double x, double y) {
    const double dx = x - 0.35 * R, dy = y - 0.15 * R;
    return (1.0 - (x * x + y * y) / (R * R)) * std::exp(-(dx * dx + dy * dy) / (0.15 * R * R));
  });
}

Field clip_nonnegative(Field u) {
  for (int n : u.grid().interior_nodes()) u[n] = std::max(u[n], 0.0);
  return u;
}

// Result assembly ------------------------------------------------------------------

class Recorder {
public:
  Recorder(const ExperimentConfig& cfg, const fs::path& root) : cfg_(cfg) {
    res_.preset = cfg.preset;
    res_.dir = root / cfg.output;
    ensure_directory(res_.dir);
  }

  void check(const std::string& name, bool pass, double value, double threshold, const std::string& detail = {}) {
    res_.verdicts.push_back({name, pass, value, threshold, detail});
  }
  void at_most(const std::string& name, double value, double limit, const std::string& detail = {}) {
    check(name, value <= limit, value, limit, detail);
  }
  void rel_within(const std::string& name, double value, double target, double rel, const std::string& detail = {}) {
    const double err = std::abs(value - target) / std::abs(target);
    std::ostringstream d;
    d << "value " << value << " vs " << target << (detail.empty() ? "" : "; ") << detail;
    check(name, err <= rel, err, rel, d.str());
  }

  Json& report(const std::string& key) { return reports_[key]; }
  void note(const std::string& text) { notes_.push_back(text); }

  void file(const std::string& rel, const std::string& text) {
    write_text(res_.dir / rel, text);
    res_.files.push_back(rel);
  }
  void field(const std::string& rel, const Field& u, double t) { file(rel, field_csv(u, t)); }
  void trajectory(const std::string& subdir, const Trajectory& tr) {
    auto files = export_trajectory(res_.dir, subdir, tr, cfg_.snapshot_every);
    res_.files.insert(res_.files.end(), files.begin(), files.end());
  }

  // Energy inequality and positivity for one trajectory.
  void flow_checks(const Trajectory& tr, const std::string& label) {
    const std::string suffix = label.empty() ? "" : "[" + label + "]";
    const EnergyReport er = verify_energy_inequality(tr);
    check("energy_inequality" + suffix, er.passes, er.max_violation, er.tolerance);
    at_most("positivity" + suffix, -tr.min_value(), 10.0 * cfg_.flow.newton_tol, "value is -min u");
    Json& j = reports_["flow" + suffix];
    j["energy"] = to_json(er);
    j["steps"] = tr.steps();
    j["rejected_steps"] = tr.rejected_steps;
    j["t_end"] = tr.t_end();
    j["aborted"] = tr.aborted;
    j["blowup_suspected"] = tr.blowup_suspected;
    j["vanished_early"] = tr.vanished_early;
    if (!tr.abort_reason.empty()) j["abort_reason"] = tr.abort_reason;
    j["min_u"] = tr.min_value();
  }

  ExperimentResult finish() {
    res_.manifest = write_manifest(res_.dir, cfg_, reports_, res_.verdicts, res_.files, notes_);
    res_.files = res_.manifest["files"].get<std::vector<std::string>>();
    return std::move(res_);
  }

private:
  const ExperimentConfig& cfg_;
  ExperimentResult res_;
  Json reports_ = Json::object();
  std::vector<std::string> notes_;
};

Json hypotheses_json(const Models& m, double s_max) {
  return to_json(check_structural_hypotheses(m.cm, m.nm, s_max, 64));
}

const Snapshot& snapshot_at(const Trajectory& tr, double t) {
  for (const auto& s : tr.snapshots)
    if (s.t == t) return s;
  throw std::logic_error("no snapshot at the sampled time");
}

void symmetry_checks(Recorder& rec, const Field& z, const std::string& suffix, bool allow_vanished = false,
                     bool vanished = false) {
  const SymmetryReport sr = symmetry_report(z);
  rec.report("symmetry" + suffix) = to_json(sr);
  const std::string why = vanished ? "omega-limit vanished" : "";
  auto one = [&](const std::string& name, double v) {
    if (allow_vanished && vanished) rec.check(name + suffix, true, v, kSymTol, why);
    else rec.at_most(name + suffix, v, kSymTol);
  };
  one("asymmetry_x1", sr.asymmetry_x1);
  one("radial_deviation", sr.radial_deviation.value_or(0.0));
  one("monotonicity_defect", sr.monotonicity_defect);
}

void moving_plane_check(Recorder& rec, const Field& z, const std::string& suffix, const std::string& csv_name) {
  const MovingPlaneReport mp = moving_plane_sweep(z, 17);
  rec.report("moving_plane" + suffix) = to_json(mp);
  rec.file(csv_name, moving_plane_csv(mp));
  const double scale = z.max_abs();
  rec.at_most("moving_plane" + suffix, scale > 0.0 ? mp.overall_max / scale : 0.0, kSymTol,
              "max (u - u_lambda)^+ over ||u||_inf");
}

// Threshold flow shared by the superlinear presets.
struct HoverRun {
  ThresholdSearch search;
  OmegaLimitReport omega;
};

HoverRun hover_run(const ExperimentConfig& cfg, const Models& m, const Field& shape) {
  HoverRun h;
  if (cfg.bisection) {
    h.search = threshold_bisection(shape, cfg.flow, m.cm, m.nm, m.reg, 0.0, 200);
  } else {
    h.search.trajectory = run_flow(cfg.amplitude * shape, cfg.flow, m.cm, m.nm, m.reg);
    h.search.alpha_lo = h.search.alpha_hi = cfg.amplitude;
    h.search.hover_time = hover_time(h.search.trajectory, &h.search.hover_ut);
  }
  const auto tau = cfg.tau.empty() ? hover_windows(h.search.hover_time, h.search.trajectory.t_end()) : cfg.tau;
  h.omega = sample_omega_limit(h.search.trajectory, tau);
  return h;
}

Json hover_json(const HoverRun& h) {
  Json j;
  j["alpha_lo"] = h.search.alpha_lo;
  j["alpha_hi"] = h.search.alpha_hi;
  j["runs"] = h.search.runs;
  j["bracketed"] = h.search.bracketed;
  j["hover_time"] = h.search.hover_time;
  j["hover_ut_l2"] = h.search.hover_ut;
  j["omega"] = to_json(h.omega);
  return j;
}

// Presets ------------------------------------------------------------------------------

void heat_decay(const ExperimentConfig& cfg, Recorder& rec) {
  const Models m = models_for(cfg);
  const Field u0 = cfg.amplitude * sine_profile(m.grid);
  rec.report("hypotheses") = hypotheses_json(m, std::max(1.0, 2.0 * u0.max_abs()));
  const Trajectory tr = run_flow(u0, cfg.flow, m.cm, m.nm, m.reg);
  rec.flow_checks(tr, "");
  rec.trajectory("", tr);

  const double L = cfg.domain.extent();
  const double lambda = kPi * kPi / (L * L);
  const double rate = -fitted_decay_rate(tr, 0.05, std::min(1.0, tr.t_end()));
  rec.rel_within("decay_rate", rate, lambda, 0.02, "fit of log max u over [0.05, 1]");
  const double e_exact = cfg.amplitude * cfg.amplitude * kPi * kPi / (4.0 * L) * std::exp(-2.0 * lambda * 0.1);
  rec.rel_within("energy_t0.1", energy_at(tr, 0.1), e_exact, 0.02);

  const OmegaLimitReport om = sample_omega_limit(tr, cfg.tau.empty() ? std::vector<double>{1, 2, 3} : cfg.tau);
  rec.report("omega") = to_json(om);
  rec.check("omega_vanished", om.verdict == OmegaVerdict::vanished, om.z_norm, om.vanish_tol);

  const double half = check_time_equicontinuity(truncate(tr, 0.5 * tr.t_end()), 0.1, 2.0);
  const double full = check_time_equicontinuity(tr, 0.1, 2.0);
  rec.report("equicontinuity") = Json{{"half_run", half}, {"full_run", full}, {"mu0", 0.1}, {"q", 2.0}};
  rec.check("equicontinuity_shrinks", full < half, full, half);
  rec.report("decay") = Json{{"fitted_rate", rate}, {"expected_rate", lambda}};
}

void quasilinear_decay(const ExperimentConfig& cfg, Recorder& rec) {
  const Models m = models_for(cfg);
  const Field u0 = cfg.amplitude * sine_profile(m.grid);
  const HypothesisReport hyp = check_structural_hypotheses(m.cm, m.nm, std::max(1.0, 2.0 * u0.max_abs()), 64);
  rec.report("hypotheses") = to_json(hyp);
  rec.check("ellipticity", hyp.ellipticity_ok.value_or(false), 0, 0);
  rec.check("sign_condition", hyp.sign_condition_ok.value_or(false), 0, 0);
  const Trajectory tr = run_flow(u0, cfg.flow, m.cm, m.nm, m.reg);
  rec.flow_checks(tr, "");
  rec.trajectory("", tr);
  const OmegaLimitReport om = sample_omega_limit(tr, cfg.tau.empty() ? std::vector<double>{1, 2, 3} : cfg.tau);
  rec.report("omega") = to_json(om);
  rec.check("omega_vanished", om.verdict == OmegaVerdict::vanished, om.z_norm, om.vanish_tol);
}

void torsion_flow(const ExperimentConfig& cfg, Recorder& rec) {
  const Models m = models_for(cfg);
  const Field u0 = cfg.amplitude * radial_profile(m.grid);
  rec.report("hypotheses") = hypotheses_json(m, 2.0);
  const Trajectory tr = run_flow(u0, cfg.flow, m.cm, m.nm, m.reg);
  rec.flow_checks(tr, "");
  rec.trajectory("", tr);

  const OmegaLimitReport om = sample_omega_limit(tr, cfg.tau.empty() ? std::vector<double>{5, 6, 7} : cfg.tau);
  rec.report("omega") = to_json(om);
  rec.check("omega_nontrivial", om.verdict == OmegaVerdict::nontrivial, om.z_norm, om.vanish_tol);
  const double ut = snapshot_at(tr, om.sampled_times.back()).ut_l2;
  const double rz = verify_stationary(om.z, m.cm, m.nm, m.reg);
  rec.at_most("omega_stationarity", rz, std::max(10.0 * ut, StationaryOptions{}.tol),
              "residual L2 of z against max(10 ||u_t||, solver tolerance)");

  const double center = exact_p_torsion(m.grid, cfg.p).max_abs();
  const double err = (om.z - exact_p_torsion(m.grid, cfg.p)).max_abs() / center;
  rec.at_most("matches_p_torsion", err, 0.05, "relative sup error against the radial profile");
  rec.field("omega_limit.csv", om.z, om.sampled_times.back());
  if (cfg.diag_symmetry) {
    // Radial spread at p != 2 is dominated by lattice anisotropy; reported only.
    const SymmetryReport sr = symmetry_report(om.z);
    rec.report("symmetry") = to_json(sr);
    rec.at_most("asymmetry_x1", sr.asymmetry_x1, kSymTol);
    rec.at_most("monotonicity_defect", sr.monotonicity_defect, kSymTol);
  }
  if (cfg.diag_moving_plane) moving_plane_check(rec, om.z, "", "moving_plane.csv");
}

void symmetry_ball(const ExperimentConfig& cfg, Recorder& rec) {
  const Models m = models_for(cfg);
  const Field shape = asymmetric_bump(m.grid);
  rec.report("hypotheses") = hypotheses_json(m, 10.0);
  const double asym0 = symmetry_report(shape).asymmetry_x1;
  rec.check("initial_data_asymmetric", asym0 >= 0.05, asym0, 0.05, "asymmetry_x1 of u0");

  const HoverRun h = hover_run(cfg, m, shape);
  const Trajectory& tr = h.search.trajectory;
  rec.report("threshold") = hover_json(h);
  rec.flow_checks(tr, "");
  rec.trajectory("", tr);
  rec.field("omega_limit.csv", h.omega.z, h.omega.sampled_times.back());

  const bool vanished = h.omega.verdict == OmegaVerdict::vanished;
  rec.check("omega_decided", h.omega.verdict != OmegaVerdict::undecided, 0, 0, to_string(h.omega.verdict));
  if (cfg.diag_symmetry) symmetry_checks(rec, h.omega.z, "", true, vanished);
  if (vanished) return;

  const StationaryResult st = solve_stationary(clip_nonnegative(h.omega.z), m.cm, m.nm, m.reg);
  rec.report("stationary") = to_json(st);
  rec.check("stationary_converged", st.converged, st.residual_norm, StationaryOptions{}.tol);
  rec.field("stationary.csv", st.z, 0.0);
  rec.at_most("cross_validation", distance_W1p(st.z, h.omega.z, cfg.p), kCrossTol,
              "W1p distance between the omega-limit and the stationary solve seeded with it");
  if (cfg.diag_symmetry) symmetry_checks(rec, st.z, "[stationary]");
  if (cfg.diag_moving_plane) moving_plane_check(rec, st.z, "[stationary]", "moving_plane.csv");
}

void uniqueness_ball(const ExperimentConfig& cfg, Recorder& rec) {
  const Models m = models_for(cfg);
  rec.report("hypotheses") = hypotheses_json(m, 10.0);
  const HypothesisReport uq = check_uniqueness_conditions(m.nm, 10.0, 256);
  rec.report("uniqueness_conditions") = to_json(uq);
  rec.check("uniqueness_conditions", uq.superlinearity_ok.value_or(false) && uq.H_monotone_ok.value_or(false), 0, 0,
            "superlinearity and monotone H");

  const Field shapes[2] = {radial_profile(m.grid), radial_profile_b(m.grid)};
  const char* labels[2] = {"profile_a", "profile_b"};
  Field limits[2];
  for (int k = 0; k < 2; ++k) {
    const std::string sfx = std::string("[") + labels[k] + "]";
    const HoverRun h = hover_run(cfg, m, shapes[k]);
    rec.report(std::string("threshold") + sfx) = hover_json(h);
    rec.flow_checks(h.search.trajectory, labels[k]);
    rec.trajectory(labels[k], h.search.trajectory);
    rec.check("omega_nontrivial" + sfx, h.omega.verdict == OmegaVerdict::nontrivial, h.omega.z_norm, h.omega.vanish_tol);
    rec.field(std::string(labels[k]) + "/omega_limit.csv", h.omega.z, h.omega.sampled_times.back());
    limits[k] = h.omega.z;

    const StationaryResult st = solve_stationary(clip_nonnegative(h.omega.z), m.cm, m.nm, m.reg);
    rec.report("stationary" + sfx) = to_json(st);
    rec.check("stationary_converged" + sfx, st.converged, st.residual_norm, StationaryOptions{}.tol);
    rec.at_most("cross_validation" + sfx, distance_W1p(st.z, h.omega.z, cfg.p), kCrossTol);
    if (cfg.diag_moving_plane) moving_plane_check(rec, st.z, sfx, std::string(labels[k]) + "/moving_plane.csv");
  }
  rec.at_most("uniqueness_distance", distance_W1p(limits[0], limits[1], cfg.p), kCrossTol,
              "W1p distance between the two omega-limits");
}

void critical_vanishing(const ExperimentConfig& cfg, Recorder& rec) {
  const Models m = models_for(cfg);
  rec.note("qualitative proxy: in two dimensions the Sobolev exponent is infinite, so the steep power " +
           m.nm.name + " stands in for the critical nonlinearity");
  rec.report("proxy") = Json{{"qualitative_proxy", true}, {"nonlinearity", m.nm.name}, {"pstar", "inf"}};
  const Field u0 = cfg.amplitude * (cfg.domain.kind == DomainKind::disk ? radial_profile(m.grid) : sine_profile(m.grid));
  rec.report("hypotheses") = hypotheses_json(m, std::max(1.0, 2.0 * u0.max_abs()));
  const Trajectory tr = run_flow(u0, cfg.flow, m.cm, m.nm, m.reg);
  rec.flow_checks(tr, "");
  rec.trajectory("", tr);

  if (tr.blowup_suspected) {
    rec.check("vanished_or_blowup", true, tr.t_end(), 0, "blow-up suspected");
    return;
  }
  const OmegaLimitReport om = sample_omega_limit(tr, cfg.tau.empty() ? std::vector<double>{1, 2, 3} : cfg.tau);
  rec.report("omega") = to_json(om);
  rec.check("vanished_or_blowup", om.verdict == OmegaVerdict::vanished, om.z_norm, om.vanish_tol,
            "omega-limit " + to_string(om.verdict));
}

void torsion_convergence(const ExperimentConfig& cfg, Recorder& rec) {
  const std::vector<double> ps = cfg.p_list.empty() ? std::vector<double>{cfg.p} : cfg.p_list;
  const int res[3] = {cfg.resolution, 2 * cfg.resolution, 4 * cfg.resolution};
  for (double p : ps) {
    const std::string tag = "p" + label_num(p);
    double err[3];
    Json runs = Json::array();
    for (int k = 0; k < 3; ++k) {
      const Models m = models_for(cfg, cfg.nonlinearity, p, res[k]);
      const StationaryResult st = solve_stationary(Field::zeros(m.grid), m.cm, m.nm, m.reg);
      const Field exact = exact_p_torsion(m.grid, p);
      err[k] = (st.z - exact).max_abs();
      Json j = to_json(st);
      j["resolution"] = res[k];
      j["linf_error"] = err[k];
      j["center_value"] = st.z.max_abs();
      runs.push_back(j);
      rec.check("converged[" + tag + ",n" + std::to_string(res[k]) + "]", st.converged, st.residual_norm,
                StationaryOptions{}.tol, st.message);
      if (k == 1) {
        rec.field(tag + "/n" + std::to_string(res[k]) + ".csv", st.z, 0.0);
        if (cfg.diag_moving_plane) moving_plane_check(rec, st.z, "[" + tag + "]", tag + "/moving_plane.csv");
        if (cfg.diag_symmetry) {
          const SymmetryReport sr = symmetry_report(st.z);
          rec.report("symmetry[" + tag + "]") = to_json(sr);
          rec.at_most("asymmetry_x1[" + tag + "]", sr.asymmetry_x1, kSymTol);
          rec.at_most("monotonicity_defect[" + tag + "]", sr.monotonicity_defect, kSymTol);
        }
      }
    }
    rec.report("convergence[" + tag + "]") = runs;
    for (int k = 0; k < 2; ++k) {
      const double ratio = err[k] / err[k + 1];
      const std::string name = "error_ratio[" + tag + "," + std::to_string(res[k]) + "->" + std::to_string(res[k + 1]) + "]";
      rec.check(name, ratio >= 1.4 && ratio <= 2.6, ratio, 2.0, "accepted range [1.4, 2.6]");
    }
  }
}

void critical_set(const ExperimentConfig& cfg, Recorder& rec) {
  const Models m = models_for(cfg);
  const GridPtr& g = m.grid;
  const double R = g->domain().radius;
  const std::vector<double> deltas = {1e-3, 1e-2, 0.05, 0.1};
  const std::vector<std::pair<double, double>> ys = {
      {0.0, 0.0}, {0.3 * R, 0.0}, {-0.3 * R, 0.2 * R}, {0.0, -0.5 * R}, {0.4 * R, 0.4 * R}};

  // Closed-form field (R^2 - r^2)/4 with |grad u| = r/2.
  const Field exact = Field::sample(g, [](double x, double y) { return 0.25 * (1.0 - x * x - y * y); });
  const CriticalSetReport ce = critical_set_report(exact, 2.0, deltas, 0.5, 0.0, 0.0, ys);
  rec.report("critical_set[closed_form]") = to_json(ce);
  rec.file("closed_form_fractions.csv", critical_set_csv(ce));
  rec.rel_within("closed_form_fraction", ce.fractions[2], 4.0 * 0.05 * 0.05, 0.2, "delta = 0.05, expected 4 delta^2");
  rec.rel_within("inverse_gradient_integral", ce.inverse_gradient_integral, 4.0 * std::sqrt(2.0) * kPi / 3.0, 0.05);
  rec.at_most("y_stability", ce.y_stability_ratio(), 3.0, "max/min over five interior points");

  // Computed steady states: torsion (f = 1) and the configured power.
  struct Case {
    std::string tag, nonlinearity;
    double guess_amplitude;
  };
  const std::vector<Case> cases = {{"torsion", "constant:1", 0.0}, {"power", cfg.nonlinearity, cfg.amplitude}};
  for (const Case& c : cases) {
    const Models mc = models_for(cfg, c.nonlinearity, cfg.p, cfg.resolution);
    const Field guess = c.guess_amplitude > 0.0 ? c.guess_amplitude * radial_profile(mc.grid) : Field::zeros(mc.grid);
    const StationaryResult st = solve_stationary(guess, mc.cm, mc.nm, mc.reg);
    const std::string sfx = "[" + c.tag + "]";
    rec.report("stationary" + sfx) = to_json(st);
    rec.check("stationary_converged" + sfx, st.converged, st.residual_norm, StationaryOptions{}.tol);
    rec.check("nontrivial" + sfx, st.z.max_abs() > 1e-2, st.z.max_abs(), 1e-2);
    rec.field(c.tag + ".csv", st.z, 0.0);
    if (!cfg.diag_critical_set) continue;
    const CriticalSetReport cr = critical_set_report(st.z, cfg.p, deltas, 0.5, 0.0, 0.0, ys);
    rec.report("critical_set" + sfx) = to_json(cr);
    rec.file(c.tag + "_fractions.csv", critical_set_csv(cr));
    rec.at_most("critical_fraction" + sfx, cr.fractions[0], 0.05, "measure fraction of |grad u| < 1e-3");
    if (cfg.diag_moving_plane) moving_plane_check(rec, st.z, sfx, c.tag + "_moving_plane.csv");
  }
}

void poincare(const ExperimentConfig& cfg, Recorder& rec) {
  const Domain& d = cfg.domain;
  if (d.kind != DomainKind::interval) throw ConfigError("poincare preset needs an interval");
  const double L = d.extent();
  auto estimate = [&](double length, double p) {
    const GridPtr g = build_grid(Domain::interval(d.x_lo, d.x_lo + length), cfg.resolution);
    const Field w = Field::sample(g, [&](double x, double) {
      const double s = (x - d.x_lo) / length;
      return length * s * (1.0 - s);
    });
    return weighted_poincare_constant(w, p, cfg.trials, cfg.seed);
  };
  const double c_full = estimate(L, 2.0);
  const double c_half = estimate(0.5 * L, 2.0);
  rec.rel_within("poincare_full", c_full, L / kPi, 0.10);
  rec.rel_within("poincare_half", c_half, 0.5 * L / kPi, 0.10);
  rec.check("poincare_monotone", c_half <= c_full, c_half, c_full);
  const double w_full = estimate(L, 3.0);
  const double w_half = estimate(0.5 * L, 3.0);
  rec.report("estimates") = Json{{"p2_full", c_full},
                                 {"p2_half", c_half},
                                 {"sharp_full", L / kPi},
                                 {"sharp_half", 0.5 * L / kPi},
                                 {"p3_weighted_full", w_full},
                                 {"p3_weighted_half", w_half},
                                 {"trials", cfg.trials}};
}

void consistency(const ExperimentConfig& cfg, Recorder& rec) {
  const GridPtr g = build_grid(cfg.domain, cfg.resolution);
  struct Combo {
    std::string coefficient, nonlinearity;
    double p;
  };
  const std::vector<Combo> combos = {
      {cfg.coefficient, cfg.nonlinearity, cfg.p}, {"const", "zero", 2.0}, {"quadratic", "power:2", 1.5}};
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Domain& d = cfg.domain;
  const double Lx = d.extent(), Ly = d.dim() == 2 ? d.y_hi - d.y_lo : 1.0;

  auto random_field = [&](double offset) {
    std::vector<double> c(9);
    for (auto& v : c) v = normal(rng);
    return Field::sample(g, [&](double x, double y) {
      const double sx = (x - d.x_lo) / Lx, sy = d.dim() == 2 ? (y - d.y_lo) / Ly : 0.5;
      double v = offset;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          v += c[static_cast<std::size_t>(3 * k + l)] * std::cos(kPi * (k + 1) * sx) * std::cos(kPi * (l + 1) * sy) /
               ((k + 1) * (l + 1));
      return v;
    });
  };

  double worst_fd = 0.0, worst_dual = 0.0;
  Json rows = Json::array();
  for (const Combo& c : combos) {
    const CoefficientModel cm = make_coefficient(c.coefficient, cfg.cap, cfg.rho);
    const NonlinearityModel nm = extend_f_hat(make_nonlinearity(c.nonlinearity, cfg.n(), c.p));
    const RegularizationParams reg = cfg.eps ? RegularizationParams{*cfg.eps} : RegularizationParams::defaults_for(*g);
    for (int k = 0; k < 20; ++k) {
      const Field u = random_field(1.0);
      const Field phi = random_field(0.0);
      const double dd = energy_directional_derivative(u, phi, cm, nm, reg);
      const double t = 1e-5;
      const double fd = (energy(u + t * phi, cm, nm, reg) - energy(u - t * phi, cm, nm, reg)) / (2.0 * t);
      const Field r = residual(u, cm, nm, reg);
      double pairing = 0.0;
      for (int n : g->interior_nodes()) pairing += r[n] * phi[n];
      pairing *= g->cell_measure();
      const double e_fd = std::abs(dd - fd) / (1.0 + std::abs(dd));
      const double e_dual = std::abs(pairing - dd) / std::max(std::abs(dd), 1e-300);
      worst_fd = std::max(worst_fd, e_fd);
      worst_dual = std::max(worst_dual, e_dual);
      rows.push_back({{"model", c.coefficient + "/" + c.nonlinearity + "/p=" + label_num(c.p)},
                      {"directional", dd},
                      {"finite_difference", fd},
                      {"pairing", pairing}});
    }
  }
  rec.report("pairs") = rows;
  rec.at_most("gradient_vs_finite_difference", worst_fd, 1e-4, "max |dE(u)phi - FD| / (1 + |dE(u)phi|) over 60 pairs");
  rec.at_most("residual_duality", worst_dual, 1e-10, "max relative gap between (R(u), phi) and dE(u)phi");
}

void comparison_torsion(const ExperimentConfig& cfg, Recorder& rec) {
  const Models mu = models_for(cfg, cfg.nonlinearity, cfg.p, cfg.resolution);
  const double load = mu.nm.f(0.0);
  std::ostringstream heavier;
  heavier << "constant:" << 1.2 * load;
  const Models mv = models_for(cfg, heavier.str(), cfg.p, cfg.resolution);
  const StationaryResult su = solve_stationary(Field::zeros(mu.grid), mu.cm, mu.nm, mu.reg);
  const StationaryResult sv = solve_stationary(Field::zeros(mv.grid), mv.cm, mv.nm, mv.reg);
  const Field v = Field::from_interior(mu.grid, sv.z.interior_vector());
  const double ru = verify_stationary(su.z, mu.cm, mu.nm, mu.reg);
  const double rv = verify_stationary(v, mv.cm, mv.nm, mv.reg);
  rec.check("solutions_converged", su.converged && sv.converged, std::max(ru, rv), StationaryOptions{}.tol);

  const double R = cfg.domain.radius;
  const std::vector<char> mask = ball_mask(*mu.grid, 0.3 * R, 0.0, 0.3 * R);
  ComparisonOptions opts;
  opts.u_residual = ru;
  opts.v_residual = rv;
  const ComparisonReport ordered = comparison_experiment(su.z, v, mask, opts);
  rec.report("ordered_loads") = to_json(ordered);
  rec.check("ordered_loads_applicable", ordered.applicable, ordered.subdomain_measure, ordered.theta, ordered.note);
  rec.at_most("ordered_loads_violation", ordered.interior_violation, 1e-8 * v.max_abs());

  ComparisonOptions same = opts;
  same.v_residual = ru;
  const ComparisonReport equal = comparison_experiment(su.z, su.z, mask, same);
  rec.report("identical") = to_json(equal);
  rec.at_most("identical_violation", equal.interior_violation, 0.0);

  // Synthetic non-solution: v plus a bump inside the mask.
  Field bumped = v;
  for (int n : mu.grid->interior_nodes())
    if (mask[static_cast<std::size_t>(n)]) {
      const double dx = mu.grid->x1(n) - 0.3 * R, dy = mu.grid->x2(n);
      bumped[n] += 0.05 * std::exp(-(dx * dx + dy * dy) / (0.01 * R * R));
    }
  ComparisonOptions synth = opts;
  synth.u_residual = verify_stationary(bumped, mv.cm, mv.nm, mv.reg);
  const ComparisonReport fake = comparison_experiment(bumped, v, mask, synth);
  rec.report("synthetic") = to_json(fake);
  rec.check("synthetic_flagged", fake.interior_violation > 0.0 && !fake.verified_stationary, fake.interior_violation, 0.0,
            fake.note);
  rec.field("u.csv", su.z, 0.0);
  rec.field("v.csv", v, 0.0);
}

}  // namespace

bool ExperimentResult::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

bool ExperimentResult::has(const std::string& name) const {
  return std::any_of(verdicts.begin(), verdicts.end(), [&](const Verdict& v) { return v.name == name; });
}

const Verdict& ExperimentResult::verdict(const std::string& name) const {
  for (const auto& v : verdicts)
    if (v.name == name) return v;
  throw std::out_of_range("no verdict named '" + name + "'");
}

Json write_manifest(const fs::path& dir, const ExperimentConfig& cfg, const Json& reports,
                    const std::vector<Verdict>& verdicts, std::vector<std::string> files,
                    const std::vector<std::string>& notes) {
  Json m;
  m["preset"] = cfg.preset;
  m["version"] = kVersion;
  m["seed"] = cfg.seed;
  Json echo = Json::object();
  for (const auto& [k, v] : cfg.echo()) echo[k] = v;
  m["config"] = echo;
  if (!notes.empty()) m["notes"] = notes;
  m["reports"] = reports.is_null() ? Json::object() : reports;
  Json jv = Json::array();
  bool all = true;
  for (const auto& v : verdicts) {
    all = all && v.pass;
    Json e;
    e["name"] = v.name;
    e["result"] = v.pass ? "PASS" : "FAIL";
    e["value"] = std::isfinite(v.value) ? Json(v.value) : Json(label_num(v.value));
    e["threshold"] = std::isfinite(v.threshold) ? Json(v.threshold) : Json(label_num(v.threshold));
    if (!v.detail.empty()) e["detail"] = v.detail;
    jv.push_back(e);
  }
  m["verdicts"] = jv;
  m["overall"] = all ? "PASS" : "FAIL";
  files.push_back("manifest.json");
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());
  m["files"] = files;
  ensure_directory(dir);
  write_text(dir / "manifest.json", dump(m));
  return m;
}

fs::path output_root_from_env() {
  const char* env = std::getenv("QLFLOW_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("qlflow_out");
}

std::vector<double> hover_windows(double t_star, double t_end) {
  std::vector<double> tau;
  for (double back : {1.5, 1.0, 0.5}) tau.push_back(std::clamp(t_star - back, 0.0, std::max(0.0, t_end - 1.0)));
  return tau;
}

Trajectory truncate(const Trajectory& tr, double t) {
  Trajectory out;
  out.p = tr.p;
  out.pstar = tr.pstar;
  out.tol_E_rel = tr.tol_E_rel;
  for (std::size_t k = 0; k < tr.times.size() && tr.times[k] <= t; ++k) {
    out.times.push_back(tr.times[k]);
    out.energy.push_back(tr.energy[k]);
    out.min_u.push_back(tr.min_u[k]);
    out.max_u.push_back(tr.max_u[k]);
    if (k > 0) {
      out.dt.push_back(tr.dt[k - 1]);
      out.ut_l2.push_back(tr.ut_l2[k - 1]);
    }
  }
  for (const auto& s : tr.snapshots)
    if (s.t <= t) out.snapshots.push_back(s);
  return out;
}

double fitted_decay_rate(const Trajectory& tr, double t0, double t1) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double t = tr.times[k];
    if (t < t0 || t > t1 || !(tr.max_u[k] > 0.0)) continue;
    const double y = std::log(tr.max_u[k]);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    ++n;
  }
  if (n < 2) throw PreconditionError("not enough samples for a decay fit");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double energy_at(const Trajectory& tr, double t) {
  if (tr.times.empty() || t < tr.times.front() || t > tr.times.back()) throw PreconditionError("time outside the run");
  const auto it = std::lower_bound(tr.times.begin(), tr.times.end(), t);
  const auto k = static_cast<std::size_t>(it - tr.times.begin());
  if (k == 0 || tr.times[k] == t) return tr.energy[k];
  const double w = (t - tr.times[k - 1]) / (tr.times[k] - tr.times[k - 1]);
  return (1.0 - w) * tr.energy[k - 1] + w * tr.energy[k];
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& output_root) {
  validate(cfg);
  Recorder rec(cfg, output_root);
  const std::string& p = cfg.preset;
  if (p == "heat_decay") heat_decay(cfg, rec);
  else if (p == "quasilinear_decay") quasilinear_decay(cfg, rec);
  else if (p == "torsion_flow") torsion_flow(cfg, rec);
  else if (p == "symmetry_ball") symmetry_ball(cfg, rec);
  else if (p == "uniqueness_ball") uniqueness_ball(cfg, rec);
  else if (p == "critical_vanishing") critical_vanishing(cfg, rec);
  else if (p == "torsion_convergence") torsion_convergence(cfg, rec);
  else if (p == "critical_set") critical_set(cfg, rec);
  else if (p == "poincare") poincare(cfg, rec);
  else if (p == "consistency") consistency(cfg, rec);
  else if (p == "comparison_torsion") comparison_torsion(cfg, rec);
  else throw ConfigError("preset '" + p + "' has no pipeline");
  return rec.finish();
}

}  // namespace qlflow
