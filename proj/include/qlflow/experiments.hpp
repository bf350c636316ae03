#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qlflow/config.hpp"
#include "qlflow/export.hpp"

namespace qlflow {

inline constexpr const char* kVersion = "0.3.1";

struct Verdict {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ExperimentResult {
  std::string preset;
  fs::path dir;  ///< absolute experiment directory
  std::vector<Verdict> verdicts;
  std::vector<std::string> files;  ///< relative to dir
  Json manifest;

  bool all_pass() const;
  /// Throws std::out_of_range for unknown names.
  const Verdict& verdict(const std::string& name) const;
  bool has(const std::string& name) const;
};

/// Runs the preset pipeline and writes <root>/<cfg.output>/manifest.json
/// together with the data files it lists.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& output_root);

/// Writes dir/manifest.json (config echo, version, seed, notes, reports, sorted
/// file list including the manifest, verdicts) and returns it.
Json write_manifest(const fs::path& dir, const ExperimentConfig& cfg, const Json& reports,
                    const std::vector<Verdict>& verdicts, std::vector<std::string> files,
                    const std::vector<std::string>& notes = {});

/// $QLFLOW_OUTPUT_ROOT, or ./qlflow_out when unset.
fs::path output_root_from_env();

/// Omega-limit windows ending at the hover time t*: tau = t* - 1.5, t* - 1, t* - 0.5,
/// clipped to [0, t_end - 1].
std::vector<double> hover_windows(double t_star, double t_end);

/// Copy of tr restricted to times <= t.
Trajectory truncate(const Trajectory& tr, double t);

/// Least-squares slope of log(max u) over recorded times in [t0, t1].
double fitted_decay_rate(const Trajectory& tr, double t0, double t1);

/// Energy at time t by linear interpolation between recorded times.
double energy_at(const Trajectory& tr, double t);

}  // namespace qlflow
