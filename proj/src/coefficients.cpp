#include "qlflow/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qlflow/errors.hpp"

namespace qlflow {

namespace {

double checked(const ScalarFn& fn, double s, const char* what) {
  const double v = fn(s);
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << what << " is not finite at sample s = " << s;
    throw EvaluationError(msg.str());
  }
  return v;
}

std::vector<double> sample_points(double s_max, int samples) {
  if (!(s_max > 0.0)) throw PreconditionError("s_max must be positive");
  if (samples < 16) throw PreconditionError("at least 16 samples are required");
  std::vector<double> s(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) s[static_cast<std::size_t>(k)] = s_max * k / (samples - 1);
  return s;
}

void record(HypothesisReport& rep, std::optional<bool>& flag, bool ok, const char* name, double s,
            double residual) {
  if (!flag) flag = true;
  if (!ok) {
    flag = false;
    rep.witnesses.push_back({name, s, residual});
  }
}

}  // namespace

double sobolev_exponent(int n, double p) {
  if (p >= n) return std::numeric_limits<double>::infinity();
  return n * p / (n - p);
}

bool HypothesisReport::all_ok() const {
  for (const auto* f : {&ellipticity_ok, &bounded_ok, &sign_condition_ok, &growth_ok, &positivity_ok,
                        &superlinearity_ok, &H_monotone_ok}) {
    if (f->has_value() && !**f) return false;
  }
  return true;
}

bool HypothesisReport::has_witness(const std::string& condition) const {
  return std::any_of(witnesses.begin(), witnesses.end(),
                     [&](const HypothesisWitness& w) { return w.condition == condition; });
}

HypothesisReport check_structural_hypotheses(const CoefficientModel& cm, const NonlinearityModel& nm,
                                             double s_max, int samples) {
  HypothesisReport rep;
  const auto pts = sample_points(s_max, samples);

  // The growth window sigma in [1, p*-1) is a property of the model, not of a sample.
  const bool window = nm.sigma >= 1.0 && (std::isinf(nm.pstar) || nm.sigma < nm.pstar - 1.0);
  record(rep, rep.growth_ok, window, "growth_window", nm.sigma, window ? 0.0 : nm.sigma - (nm.pstar - 1.0));

  for (double s : pts) {
    const double a = checked(cm.a, s, "a");
    const double a1 = checked(cm.a1, s, "a'");
    const double f = checked(nm.f, s, "f");

    record(rep, rep.ellipticity_ok, a >= cm.eta, "ellipticity", s, cm.eta - a);
    const double excess = std::max(std::abs(a), std::abs(a1)) - cm.cap;
    record(rep, rep.bounded_ok, excess <= 0.0, "bounded", s, excess);
    if (s >= cm.rho) record(rep, rep.sign_condition_ok, a1 * s >= 0.0, "sign_condition", s, a1 * s);

    const double bound = nm.c1 + nm.c2 * std::pow(s, nm.sigma);
    const double slack = std::abs(f) - bound;
    record(rep, rep.growth_ok, slack <= 1e-12 * (1.0 + bound), "growth", s, slack);

    if (s > 0.0) record(rep, rep.positivity_ok, f > 0.0, "positivity", s, f);
  }
  if (!rep.sign_condition_ok) rep.sign_condition_ok = true;  // no sample reached rho
  return rep;
}

HypothesisReport check_uniqueness_conditions(const NonlinearityModel& nm, double s_max, int samples,
                                             const HypothesisOptions& opts) {
  HypothesisReport rep;
  const auto pts = sample_points(s_max, samples);
  const double n = nm.n;
  const double p = nm.p;

  rep.h_values.reserve(pts.size());
  for (double s : pts) {
    if (s == 0.0) {
      rep.h_values.emplace_back(0.0, 0.0);
      continue;
    }
    const double f = checked(nm.f, s, "f");
    const double f1 = checked(nm.f1, s, "f'");
    const double F = checked(nm.bigF, s, "F");
    if (f == 0.0) {
      std::ostringstream msg;
      msg << "f vanishes at s = " << s << "; H(s) divides by f";
      throw EvaluationError(msg.str());
    }
    const double lhs = (p - 1.0) * f;
    const double rhs = s * f1;
    const double margin = rhs - lhs;
    const bool strict = lhs > 0.0 && margin > 1e-12 * (std::abs(rhs) + std::abs(lhs));
    record(rep, rep.superlinearity_ok, strict, "superlinearity", s, margin);
    rep.h_values.emplace_back(s, (n - p) * s - n * p * F / f);
  }

  for (std::size_t k = 1; k < rep.h_values.size(); ++k) {
    const auto [s0, h0] = rep.h_values[k - 1];
    const auto [s1, h1] = rep.h_values[k];
    const double slope = (h1 - h0) / (s1 - s0);
    const double tol = opts.tol_h_rel * (1.0 + std::max(std::abs(h0), std::abs(h1)));
    record(rep, rep.H_monotone_ok, slope <= tol, "H_monotone", s1, slope);
  }
  return rep;
}

NonlinearityModel extend_f_hat(const NonlinearityModel& nm) {
  if (nm.zero_extended) return nm;
  NonlinearityModel out = nm;
  out.f = [f = nm.f](double s) { return s >= 0.0 ? f(s) : 0.0; };
  out.f1 = [f1 = nm.f1](double s) { return s > 0.0 ? f1(s) : 0.0; };
  out.bigF = [F = nm.bigF](double s) { return s >= 0.0 ? F(s) : 0.0; };
  out.name = nm.name + "^";
  out.zero_extended = true;
  return out;
}

CoefficientModel make_coefficient(const std::string& name, double cap, double rho) {
  CoefficientModel cm;
  cm.name = name;
  cm.rho = rho;
  if (name == "const") {
    cm.a = [](double) { return 1.0; };
    cm.a1 = [](double) { return 0.0; };
    cm.a2 = [](double) { return 0.0; };
    cm.eta = 1.0;
    cm.cap = std::max(cap, 1.0);
    cm.constant = true;
  } else if (name == "quadratic") {
    cm.a = [](double s) { return 1.0 + s * s; };
    cm.a1 = [](double s) { return 2.0 * s; };
    cm.a2 = [](double) { return 2.0; };
    cm.eta = 1.0;
    cm.cap = cap;
  } else {
    throw ConfigError("unknown coefficient model '" + name + "'");
  }
  return cm;
}

NonlinearityModel power_nonlinearity(double q, int n, double p) {
  if (!(q > 0.0)) throw ConfigError("power exponent must be positive");
  NonlinearityModel nm;
  std::ostringstream name;
  name << "power:" << q;
  nm.name = name.str();
  nm.f = [q](double s) { return std::pow(s, q); };
  nm.f1 = [q](double s) { return q * std::pow(s, q - 1.0); };
  nm.bigF = [q](double s) { return std::pow(s, q + 1.0) / (q + 1.0); };
  nm.sigma = q;
  nm.c1 = 0.0;
  nm.c2 = 1.0;
  nm.n = n;
  nm.p = p;
  nm.pstar = sobolev_exponent(n, p);
  return nm;
}

NonlinearityModel make_nonlinearity(const std::string& name, int n, double p) {
  if (!(p > 1.0)) throw ConfigError("p must exceed 1");
  const auto colon = name.find(':');
  const std::string head = name.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : name.substr(colon + 1);

  auto parse_arg = [&]() {
    try {
      std::size_t used = 0;
      const double v = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad parameter in nonlinearity '" + name + "'");
    }
  };

  if (head == "power") return power_nonlinearity(parse_arg(), n, p);
  if (head == "critical") {
    const double ps = sobolev_exponent(n, p);
    if (std::isinf(ps)) throw ConfigError("critical nonlinearity needs p < n (p* is infinite)");
    auto nm = power_nonlinearity(ps - 1.0, n, p);
    nm.name = "critical";
    return nm;
  }

  NonlinearityModel nm;
  nm.n = n;
  nm.p = p;
  nm.pstar = sobolev_exponent(n, p);
  nm.sigma = 1.0;
  if (head == "zero") {
    nm.name = "zero";
    nm.f = [](double) { return 0.0; };
    nm.f1 = [](double) { return 0.0; };
    nm.bigF = [](double) { return 0.0; };
    return nm;
  }
  if (head == "constant") {
    const double c = parse_arg();
    nm.name = name;
    nm.f = [c](double) { return c; };
    nm.f1 = [](double) { return 0.0; };
    nm.bigF = [c](double s) { return c * s; };
    nm.c1 = std::abs(c);
    return nm;
  }
  throw ConfigError("unknown nonlinearity model '" + name + "'");
}

}  // namespace qlflow
