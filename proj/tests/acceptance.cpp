// Runs every shipped config and prints one PASS/FAIL line per acceptance criterion.
// Verdicts come from the experiment manifests; wall-clock budgets are measured here.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qlflow/config.hpp"
#include "qlflow/experiments.hpp"

using namespace qlflow;

namespace {

struct Run {
  ExperimentResult result;
  double seconds = 0.0;
  std::string error;
};

std::map<std::string, Run> runs;

const Run& run(const std::string& preset) {
  auto it = runs.find(preset);
  if (it != runs.end()) return it->second;
  Run r;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto cfg = load_config(std::string(QLFLOW_CONFIG_DIR) + "/" + preset + ".ini");
    r.result = run_experiment(cfg, fs::path(QLFLOW_ACCEPTANCE_OUT));
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return runs.emplace(preset, std::move(r)).first->second;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

// Every verdict whose name starts with prefix across the given presets must pass,
// and at least one must exist.
void all_with_prefix(Outcome& o, const std::vector<std::string>& presets, const std::string& prefix) {
  int seen = 0;
  for (const auto& p : presets) {
    const Run& r = run(p);
    if (!r.error.empty()) {
      o.require(false, p + " raised: " + r.error);
      continue;
    }
    for (const auto& v : r.result.verdicts) {
      if (!starts_with(v.name, prefix)) continue;
      ++seen;
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s/%s value %.3g", p.c_str(), v.name.c_str(), v.value);
      o.require(v.pass, buf);
    }
  }
  o.require(seen > 0, "no '" + prefix + "' verdicts");
}

void named(Outcome& o, const std::string& preset, const std::vector<std::string>& names) {
  const Run& r = run(preset);
  if (!r.error.empty()) return o.require(false, preset + " raised: " + r.error);
  for (const auto& n : names) {
    if (!r.result.has(n)) {
      o.require(false, preset + " lacks " + n);
      continue;
    }
    const auto& v = r.result.verdict(n);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s/%s value %.3g threshold %.3g", preset.c_str(), n.c_str(), v.value, v.threshold);
    o.require(v.pass, buf);
  }
}

void budget(Outcome& o, const std::string& preset, double seconds) {
  const double t = run(preset).seconds;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s took %.1f s (budget %.0f s)", preset.c_str(), t, seconds);
  o.require(t < seconds, buf);
}

const std::vector<std::string> kFlowPresets = {"heat_decay",      "quasilinear_decay", "torsion_flow",
                                               "symmetry_ball",   "uniqueness_ball",   "critical_vanishing"};
const std::vector<std::string> kAllPresets = {"heat_decay",         "quasilinear_decay", "torsion_flow",
                                              "symmetry_ball",      "uniqueness_ball",   "critical_vanishing",
                                              "torsion_convergence", "critical_set",     "poincare",
                                              "consistency",        "comparison_torsion"};

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"heat-equation oracle",
       [] {
         Outcome o;
         named(o, "heat_decay", {"decay_rate", "energy_t0.1"});
         budget(o, "heat_decay", 10);
         return o;
       }},
      {"p-torsion convergence",
       [] {
         Outcome o;
         all_with_prefix(o, {"torsion_convergence"}, "error_ratio");
         all_with_prefix(o, {"torsion_convergence"}, "converged");
         budget(o, "torsion_convergence", 120);
         return o;
       }},
      {"energy inequality on every flow preset",
       [] {
         Outcome o;
         all_with_prefix(o, kFlowPresets, "energy_inequality");
         return o;
       }},
      {"asymptotic symmetry of the omega-limit",
       [] {
         Outcome o;
         named(o, "symmetry_ball", {"initial_data_asymmetric", "asymmetry_x1", "radial_deviation", "monotonicity_defect"});
         budget(o, "symmetry_ball", 300);
         return o;
       }},
      {"uniqueness of the positive steady state",
       [] {
         Outcome o;
         named(o, "uniqueness_ball",
               {"uniqueness_conditions", "omega_nontrivial[profile_a]", "omega_nontrivial[profile_b]",
                "uniqueness_distance"});
         return o;
       }},
      {"moving-plane defect on stationary solutions",
       [] {
         Outcome o;
         all_with_prefix(o, kAllPresets, "moving_plane");
         return o;
       }},
      {"critical-set measure",
       [] {
         Outcome o;
         named(o, "critical_set", {"closed_form_fraction", "critical_fraction[torsion]", "critical_fraction[power]"});
         return o;
       }},
      {"weighted gradient integrals",
       [] {
         Outcome o;
         named(o, "critical_set", {"inverse_gradient_integral", "y_stability"});
         return o;
       }},
      {"weighted Poincare constants",
       [] {
         Outcome o;
         named(o, "poincare", {"poincare_full", "poincare_half", "poincare_monotone"});
         return o;
       }},
      {"gradient and duality consistency",
       [] {
         Outcome o;
         named(o, "consistency", {"gradient_vs_finite_difference", "residual_duality"});
         return o;
       }},
      {"positivity along every flow preset",
       [] {
         Outcome o;
         all_with_prefix(o, kFlowPresets, "positivity");
         return o;
       }},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const Outcome o = criteria[k].second();
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s%s%s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.empty() ? "" : " -- ", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("\npreset runtimes:\n");
  for (const auto& [name, r] : runs)
    std::printf("  %-22s %7.1f s  manifest %s\n", name.c_str(), r.seconds,
                r.error.empty() ? (r.result.all_pass() ? "PASS" : "FAIL") : "ERROR");
  return failed == 0 ? 0 : 1;
}
