#include "qlflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qlflow/coefficients.hpp"
#include "qlflow/errors.hpp"

namespace qlflow {

namespace pt = boost::property_tree;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  return static_cast<long long>(d);
}

bool to_bool(const std::string& key, std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError("'" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (v.empty()) return out;
  for (const auto& item : split(v, ',')) out.push_back(to_double(key, item));
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

using Setter = void (*)(ExperimentConfig&, const std::string&, const std::string&);

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"experiment.preset", [](ExperimentConfig&, const std::string&, const std::string&) {}},
      {"experiment.seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const long long s = to_int(k, v);
         if (s < 0) throw ConfigError("seed must be nonnegative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"experiment.amplitude", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.amplitude = to_double(k, v); }},
      {"experiment.tau", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.tau = to_list(k, v); }},
      {"experiment.p_list", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.p_list = to_list(k, v); }},
      {"experiment.trials", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.trials = static_cast<int>(to_int(k, v)); }},
      {"experiment.bisection", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.bisection = to_bool(k, v); }},
      {"domain.shape", [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.domain = parse_domain(v);
         c.domain_text = v;
       }},
      {"domain.resolution", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.resolution = static_cast<int>(to_int(k, v)); }},
      {"model.coefficient", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.coefficient = v; }},
      {"model.cap", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.cap = to_double(k, v); }},
      {"model.rho", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.rho = to_double(k, v); }},
      {"model.nonlinearity", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.nonlinearity = v; }},
      {"model.p", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.p = to_double(k, v); }},
      {"model.eps", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "default") c.eps.reset();
         else c.eps = to_double(k, v);
       }},
      {"flow.scheme", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.flow.scheme = scheme_from_string(v); }},
      {"flow.dt0", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.flow.dt0 = to_double(k, v); }},
      {"flow.t_end", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.flow.t_end = to_double(k, v); }},
      {"flow.newton_tol", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.flow.newton_tol = to_double(k, v); }},
      {"flow.newton_max_iter", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.flow.newton_max_iter = static_cast<int>(to_int(k, v)); }},
      {"flow.backtrack", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.flow.backtrack = to_double(k, v); }},
      {"flow.snapshot_stride", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.flow.snapshot_stride = static_cast<int>(to_int(k, v)); }},
      {"flow.dt_min", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.flow.dt_min = to_double(k, v); }},
      {"flow.dt_max", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.flow.dt_max = to_double(k, v); }},
      {"flow.tol_E_rel", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.flow.tol_E_rel = to_double(k, v); }},
      {"flow.blowup_ceiling", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.flow.blowup_ceiling = to_double(k, v); }},
      {"flow.vanish_floor", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.flow.vanish_floor = to_double(k, v); }},
      {"diagnostics.symmetry", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.diag_symmetry = to_bool(k, v); }},
      {"diagnostics.moving_plane", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.diag_moving_plane = to_bool(k, v); }},
      {"diagnostics.critical_set", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.diag_critical_set = to_bool(k, v); }},
      {"output.dir", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output = v; }},
      {"output.snapshot_every", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.snapshot_every = static_cast<int>(to_int(k, v)); }},
  };
  return table;
}

}  // namespace

Domain parse_domain(const std::string& text) {
  const auto parts = split(text, ':');
  std::vector<double> v;
  for (std::size_t i = 1; i < parts.size(); ++i) v.push_back(to_double("domain.shape", parts[i]));
  try {
    if (parts[0] == "interval" && v.size() == 2) return Domain::interval(v[0], v[1]);
    if (parts[0] == "rectangle" && v.size() == 4) return Domain::rectangle(v[0], v[1], v[2], v[3]);
    if (parts[0] == "disk" && v.size() == 1) return Domain::disk(v[0]);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("bad domain '") + text + "': " + e.what());
  }
  throw ConfigError("bad domain '" + text + "' (use interval:a:b, rectangle:a:b:c:d or disk:R)");
}

const std::vector<PresetInfo>& preset_catalogue() {
  static const std::vector<PresetInfo> list = {
      {"heat_decay", "linear heat flow of sin(pi x); decay rate and energy against the exact solution"},
      {"quasilinear_decay", "a(u) = 1 + u^2 with f = u^3 from small data; decay to zero"},
      {"torsion_flow", "p = 3 flow with unit load on the disk; convergence to the p-torsion profile"},
      {"symmetry_ball", "f = u^3 on the disk from asymmetric data at the decay/blow-up threshold"},
      {"uniqueness_ball", "f = u^2 on the disk from two radial profiles; same omega-limit"},
      {"critical_vanishing", "steep power u^7 as a qualitative proxy for the critical exponent"},
      {"torsion_convergence", "stationary p-torsion on refined disk grids for several p"},
      {"critical_set", "critical-set measure and gradient-weighted integrals on disk steady states"},
      {"poincare", "Poincare constant estimates on intervals of length 1 and 1/2"},
      {"consistency", "energy gradient against finite differences and residual duality"},
      {"comparison_torsion", "comparison on a small subdomain for ordered torsion loads"},
  };
  return list;
}

bool is_preset(const std::string& name) {
  const auto& list = preset_catalogue();
  return std::any_of(list.begin(), list.end(), [&](const PresetInfo& p) { return p.name == name; });
}

ExperimentConfig default_config(const std::string& preset) {
  if (!is_preset(preset)) throw ConfigError("unknown preset '" + preset + "'");
  ExperimentConfig c;
  c.preset = preset;
  c.output = preset;
  auto disk = [&](int res) {
    c.domain_text = "disk:1";
    c.domain = Domain::disk(1.0);
    c.resolution = res;
  };
  auto interval = [&](double a, double b, int res) {
    std::ostringstream s;
    s << "interval:" << a << ":" << b;
    c.domain_text = s.str();
    c.domain = Domain::interval(a, b);
    c.resolution = res;
  };

  if (preset == "heat_decay") {
    interval(0.0, 1.0, 128);
    c.flow.scheme = Scheme::implicit;
    c.flow.dt0 = 1e-3;
    c.flow.t_end = 4.0;
    c.tau = {1.0, 2.0, 3.0};
  } else if (preset == "quasilinear_decay") {
    interval(-1.0, 1.0, 128);
    c.coefficient = "quadratic";
    c.nonlinearity = "power:3";
    c.amplitude = 0.5;
    c.flow.scheme = Scheme::implicit;
    c.flow.dt0 = 2e-3;
    c.flow.t_end = 4.0;
    c.tau = {1.0, 2.0, 3.0};
  } else if (preset == "torsion_flow") {
    disk(64);
    c.nonlinearity = "constant:1";
    c.p = 3.0;
    c.amplitude = 0.1;
    c.flow.scheme = Scheme::implicit;
    c.flow.dt0 = 1e-2;
    c.flow.t_end = 8.0;
    c.tau = {5.0, 6.0, 7.0};
    c.snapshot_every = 20;
  } else if (preset == "symmetry_ball" || preset == "uniqueness_ball") {
    disk(preset == "symmetry_ball" ? 96 : 64);
    c.nonlinearity = preset == "symmetry_ball" ? "power:3" : "power:2";
    c.bisection = true;
    c.flow.scheme = Scheme::semi_implicit;
    c.flow.dt0 = 1e-2;
    c.flow.t_end = 60.0;
    c.flow.snapshot_stride = 5;
    c.flow.blowup_ceiling = 100.0;
    c.flow.vanish_floor = 1e-2;
    c.snapshot_every = 20;
  } else if (preset == "critical_vanishing") {
    disk(64);
    c.nonlinearity = "power:7";
    c.amplitude = 1.0;
    c.flow.scheme = Scheme::semi_implicit;
    c.flow.dt0 = 2e-3;
    c.flow.t_end = 4.0;
    c.flow.blowup_ceiling = 1e3;
    c.tau = {1.0, 2.0, 3.0};
    c.snapshot_every = 20;
  } else if (preset == "torsion_convergence") {
    disk(64);
    c.nonlinearity = "constant:1";
    c.p_list = {1.5, 2.0, 3.0};
  } else if (preset == "critical_set") {
    disk(128);
    c.nonlinearity = "power:3";
    c.amplitude = 3.6;
  } else if (preset == "poincare") {
    interval(0.0, 1.0, 128);
    c.trials = 64;
  } else if (preset == "consistency") {
    disk(24);
    c.coefficient = "quadratic";
    c.nonlinearity = "power:3";
    c.p = 3.0;
  } else if (preset == "comparison_torsion") {
    disk(64);
    c.nonlinearity = "constant:1";
  }
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  const auto preset = tree.get_optional<std::string>("experiment.preset");
  if (!preset) throw ConfigError("missing [experiment] preset");
  ExperimentConfig cfg = default_config(*preset);

  // Domain first so that later keys see the configured geometry.
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside a section");
    for (const auto& [key, value] : body) entries.emplace_back(section + "." + key, value.data());
  }
  std::stable_partition(entries.begin(), entries.end(), [](const auto& e) { return e.first.rfind("domain.", 0) == 0; });
  for (const auto& [key, value] : entries) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(cfg, key, value);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void validate(const ExperimentConfig& c) {
  if (!is_preset(c.preset)) throw ConfigError("unknown preset '" + c.preset + "'");
  if (c.resolution < 8) throw ConfigError("resolution must be at least 8");
  if (!(c.p > 1.0)) throw ConfigError("p must exceed 1");
  if (c.eps && (*c.eps < 0.0 || (*c.eps == 0.0 && c.p != 2.0)))
    throw ConfigError("eps must be positive (zero only for p = 2)");
  if (c.snapshot_every < 1) throw ConfigError("snapshot_every must be at least 1");
  if (c.trials < 32) throw ConfigError("trials must be at least 32");
  if (c.output.empty() || c.output.find("..") != std::string::npos) throw ConfigError("bad output directory");
  try {
    c.flow.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("[flow] ") + e.what());
  }
  for (double t : c.tau)
    if (!(t >= 0.0) || t + 1.0 > c.flow.t_end) throw ConfigError("tau windows must lie inside [0, t_end]");
  for (double q : c.p_list)
    if (!(q > 1.0)) throw ConfigError("p_list entries must exceed 1");

  make_coefficient(c.coefficient, c.cap, c.rho);
  const NonlinearityModel nm = make_nonlinearity(c.nonlinearity, c.n(), c.p);

  const bool needs_symmetry = c.preset == "symmetry_ball" || c.preset == "uniqueness_ball" ||
                              c.preset == "torsion_convergence" || c.preset == "critical_set" ||
                              c.preset == "comparison_torsion" || c.preset == "torsion_flow";
  if (needs_symmetry && c.domain.kind != DomainKind::disk) throw ConfigError("preset '" + c.preset + "' needs a disk");
  if (c.preset == "uniqueness_ball" || c.preset == "symmetry_ball" || c.preset == "critical_vanishing") {
    if (nm.name.rfind("power:", 0) != 0 && nm.name != "critical")
      throw ConfigError("preset '" + c.preset + "' needs a power nonlinearity");
  }
  if (c.preset == "uniqueness_ball") {
    const double q = nm.sigma;
    if (!(q > c.p - 1.0 && q < nm.pstar - 1.0)) {
      std::ostringstream msg;
      msg << "exponent q = " << q << " outside the uniqueness window (" << c.p - 1.0 << ", " << nm.pstar - 1.0 << ")";
      throw ConfigError(msg.str());
    }
  }
  if (c.bisection && (!std::isfinite(c.flow.blowup_ceiling) || !(c.flow.vanish_floor > 0.0)))
    throw ConfigError("threshold bisection needs flow.blowup_ceiling and flow.vanish_floor");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  auto inf_or = [](double v) { return std::isinf(v) ? std::string("inf") : fmt(v); };
  return {
      {"experiment.preset", preset},
      {"experiment.seed", std::to_string(seed)},
      {"experiment.amplitude", fmt(amplitude)},
      {"experiment.tau", fmt_list(tau)},
      {"experiment.p_list", fmt_list(p_list)},
      {"experiment.trials", std::to_string(trials)},
      {"experiment.bisection", bisection ? "true" : "false"},
      {"domain.shape", domain_text},
      {"domain.resolution", std::to_string(resolution)},
      {"model.coefficient", coefficient},
      {"model.cap", fmt(cap)},
      {"model.rho", fmt(rho)},
      {"model.nonlinearity", nonlinearity},
      {"model.p", fmt(p)},
      {"model.eps", eps ? fmt(*eps) : "default"},
      {"flow.scheme", to_string(flow.scheme)},
      {"flow.dt0", fmt(flow.dt0)},
      {"flow.t_end", fmt(flow.t_end)},
      {"flow.newton_tol", fmt(flow.newton_tol)},
      {"flow.newton_max_iter", std::to_string(flow.newton_max_iter)},
      {"flow.backtrack", fmt(flow.backtrack)},
      {"flow.snapshot_stride", std::to_string(flow.snapshot_stride)},
      {"flow.dt_min", fmt(flow.dt_min)},
      {"flow.dt_max", fmt(flow.dt_max)},
      {"flow.tol_E_rel", fmt(flow.tol_E_rel)},
      {"flow.blowup_ceiling", inf_or(flow.blowup_ceiling)},
      {"flow.vanish_floor", fmt(flow.vanish_floor)},
      {"diagnostics.symmetry", diag_symmetry ? "true" : "false"},
      {"diagnostics.moving_plane", diag_moving_plane ? "true" : "false"},
      {"diagnostics.critical_set", diag_critical_set ? "true" : "false"},
      {"output.dir", output},
      {"output.snapshot_every", std::to_string(snapshot_every)},
  };
}

}  // namespace qlflow
