#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qlflow/domain_grid.hpp"
#include "qlflow/parabolic_flow.hpp"

namespace qlflow {

struct ExperimentConfig {
  std::string preset;
  std::string domain_text = "interval:0:1";  ///< interval:a:b, rectangle:a:b:c:d, disk:R
  Domain domain = Domain::interval(0.0, 1.0);
  int resolution = 64;

  std::string coefficient = "const";
  double cap = 100.0;
  double rho = 0.0;
  std::string nonlinearity = "zero";
  double p = 2.0;
  std::optional<double> eps;  ///< empty: 1e-6 * resolution

  FlowConfig flow;
  double amplitude = 1.0;
  std::vector<double> tau;     ///< omega-limit windows; empty lets the preset choose
  std::vector<double> p_list;  ///< exponents swept by the convergence preset
  int trials = 64;
  bool bisection = false;

  bool diag_symmetry = true;
  bool diag_moving_plane = true;
  bool diag_critical_set = true;

  std::string output;  ///< subdirectory under the output root; defaults to the preset name
  int snapshot_every = 10;  ///< export every k-th recorded snapshot
  std::uint64_t seed = 1;

  int n() const { return domain.dim(); }
  /// Flat (section.key, value) listing of the effective configuration.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

struct PresetInfo {
  std::string name;
  std::string summary;
};

const std::vector<PresetInfo>& preset_catalogue();
bool is_preset(const std::string& name);

/// Defaults of a registered preset; throws ConfigError for unknown names.
ExperimentConfig default_config(const std::string& preset);

/// INI text with sections [experiment], [domain], [model], [flow],
/// [diagnostics] and [output]. [experiment] preset is required; every other
/// key overrides the preset default. Unknown sections or keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Model names, numeric ranges and preset-specific windows; throws ConfigError.
void validate(const ExperimentConfig& cfg);

Domain parse_domain(const std::string& text);

}  // namespace qlflow
