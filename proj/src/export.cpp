#include "qlflow/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace qlflow {

namespace {

// Round-trip precision, stable across runs.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON cannot carry inf/nan; they become strings.
Json jnum(double v) {
  if (std::isfinite(v)) return v;
  return num(v);
}

Json jlist(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(jnum(x));
  return a;
}

}  // namespace

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string field_csv(const Field& u, double t) {
  const Grid& g = u.grid();
  std::ostringstream s;
  s << "# domain=" << g.domain().describe() << " h=" << num(g.h()) << " t=" << num(t) << "\n";
  s << "x1,x2,value\n";
  for (int n : g.interior_nodes()) s << num(g.x1(n)) << "," << num(g.x2(n)) << "," << num(u[n]) << "\n";
  return s.str();
}

void write_field_csv(const fs::path& path, const Field& u, double t) { write_text(path, field_csv(u, t)); }

std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream s;
  s << "t,energy,ut_l2,min_u,max_u\n";
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double ut = k == 0 ? 0.0 : tr.ut_l2[k - 1];
    s << num(tr.times[k]) << "," << num(tr.energy[k]) << "," << num(ut) << "," << num(tr.min_u[k]) << ","
      << num(tr.max_u[k]) << "\n";
  }
  return s.str();
}

std::string snapshot_name(double t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f.csv", t);
  return buf;
}

std::vector<std::string> export_trajectory(const fs::path& root, const fs::path& dir, const Trajectory& tr,
                                           int snapshot_every) {
  std::vector<std::string> files;
  const fs::path series = dir / "energy.csv";
  write_text(root / series, trajectory_csv(tr));
  files.push_back(series.generic_string());
  const std::size_t every = static_cast<std::size_t>(std::max(1, snapshot_every));
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    if (k % every != 0 && k + 1 != tr.snapshots.size()) continue;
    const Snapshot& s = tr.snapshots[k];
    const fs::path rel = dir / snapshot_name(s.t);
    write_field_csv(root / rel, s.u, s.t);
    files.push_back(rel.generic_string());
  }
  return files;
}

Json to_json(const SymmetryReport& r) {
  Json j;
  j["asymmetry_x1"] = jnum(r.asymmetry_x1);
  j["radial_deviation"] = r.radial_deviation ? jnum(*r.radial_deviation) : Json(nullptr);
  j["monotonicity_defect"] = jnum(r.monotonicity_defect);
  return j;
}

Json to_json(const MovingPlaneReport& r) {
  Json j;
  j["overall_max"] = jnum(r.overall_max);
  j["lambdas"] = jlist(r.lambdas);
  j["defects"] = jlist(r.defects);
  return j;
}

Json to_json(const CriticalSetReport& r) {
  Json j;
  j["p"] = r.p;
  j["r"] = r.r_exp;
  j["beta"] = r.beta;
  j["gamma"] = r.gamma;
  j["deltas"] = jlist(r.deltas);
  j["fractions"] = jlist(r.fractions);
  j["inverse_gradient_integral"] = jnum(r.inverse_gradient_integral);
  j["inverse_gradient_by_y"] = jlist(r.inverse_gradient_by_y);
  j["y_stability_ratio"] = jnum(r.y_stability_ratio());
  j["hessian_integral"] = jnum(r.hessian_integral);
  Json ys = Json::array();
  for (const auto& [a, b] : r.y_samples) ys.push_back({a, b});
  j["y_samples"] = ys;
  return j;
}

Json to_json(const ComparisonReport& r) {
  Json j;
  j["subdomain_measure"] = r.subdomain_measure;
  j["theta"] = r.theta;
  j["boundary_ordered"] = r.boundary_ordered;
  j["small_domain"] = r.small_domain;
  j["verified_stationary"] = r.verified_stationary;
  j["applicable"] = r.applicable;
  j["interior_violation"] = jnum(r.interior_violation);
  j["passes"] = r.passes;
  j["note"] = r.note;
  return j;
}

Json to_json(const EnergyReport& r, bool with_series) {
  Json j;
  j["passes"] = r.passes;
  j["max_violation"] = jnum(r.max_violation);
  j["tolerance"] = jnum(r.tolerance);
  j["max_positive_jump"] = jnum(r.max_positive_jump);
  j["steps"] = r.times.empty() ? 0 : r.times.size() - 1;
  if (with_series) {
    j["times"] = jlist(r.times);
    j["energy"] = jlist(r.energy);
    j["dissipation"] = jlist(r.dissipation);
  }
  return j;
}

Json to_json(const OmegaLimitReport& r) {
  Json j;
  j["verdict"] = to_string(r.verdict);
  j["sampled_times"] = jlist(r.sampled_times);
  j["metrics"] = jlist(r.metrics);
  j["z_norm_W1p"] = jnum(r.z_norm);
  j["vanish_tol"] = jnum(r.vanish_tol);
  return j;
}

Json to_json(const StationaryResult& r) {
  Json j;
  j["converged"] = r.converged;
  j["residual_l2"] = jnum(r.residual_norm);
  j["iterations"] = r.iterations;
  j["descent_steps"] = r.descent_steps;
  j["eps_path"] = jlist(r.eps_path);
  j["message"] = r.message;
  return j;
}

Json to_json(const HypothesisReport& r) {
  Json j;
  auto flag = [&](const char* name, const std::optional<bool>& f) { j[name] = f ? Json(*f) : Json(nullptr); };
  flag("ellipticity_ok", r.ellipticity_ok);
  flag("bounded_ok", r.bounded_ok);
  flag("sign_condition_ok", r.sign_condition_ok);
  flag("growth_ok", r.growth_ok);
  flag("positivity_ok", r.positivity_ok);
  flag("superlinearity_ok", r.superlinearity_ok);
  flag("H_monotone_ok", r.H_monotone_ok);
  Json w = Json::array();
  const std::size_t shown = std::min<std::size_t>(r.witnesses.size(), 8);
  for (std::size_t k = 0; k < shown; ++k)
    w.push_back({{"condition", r.witnesses[k].condition},
                 {"sample", jnum(r.witnesses[k].sample)},
                 {"residual", jnum(r.witnesses[k].residual)}});
  j["witnesses"] = w;
  j["witness_count"] = r.witnesses.size();
  return j;
}

std::string moving_plane_csv(const MovingPlaneReport& r) {
  std::ostringstream s;
  s << "lambda,defect\n";
  for (std::size_t k = 0; k < r.lambdas.size(); ++k) s << num(r.lambdas[k]) << "," << num(r.defects[k]) << "\n";
  return s.str();
}

std::string critical_set_csv(const CriticalSetReport& r) {
  std::ostringstream s;
  s << "delta,fraction\n";
  for (std::size_t k = 0; k < r.deltas.size(); ++k) s << num(r.deltas[k]) << "," << num(r.fractions[k]) << "\n";
  return s.str();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace qlflow
