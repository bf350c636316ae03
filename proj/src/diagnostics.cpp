#include "qlflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "qlflow/errors.hpp"
#include "qlflow/operators.hpp"

namespace qlflow {

namespace {

void require_symmetric(const Grid& g) {
  if (!g.domain().symmetric_in_x1()) throw PreconditionError("domain is not symmetric in x1");
}

// Second differences at a deep-interior node: |D^2 u|^2 (Frobenius).
double hessian_sq(const Field& u, int node) {
  const Grid& g = u.grid();
  const double h2 = g.h() * g.h();
  const int i = g.node_i(node), j = g.node_j(node);
  const double c = u[node];
  const double uxx = (u[g.node(i + 1, j)] - 2.0 * c + u[g.node(i - 1, j)]) / h2;
  if (g.dim() == 1) return uxx * uxx;
  const double uyy = (u[g.node(i, j + 1)] - 2.0 * c + u[g.node(i, j - 1)]) / h2;
  const double uxy = (u[g.node(i + 1, j + 1)] - u[g.node(i + 1, j - 1)] - u[g.node(i - 1, j + 1)] +
                      u[g.node(i - 1, j - 1)]) /
                     (4.0 * h2);
  return uxx * uxx + uyy * uyy + 2.0 * uxy * uxy;
}

double distance_weight(const Grid& g, int node, std::pair<double, double> y, double gamma) {
  if (gamma == 0.0) return 1.0;
  const double d = std::hypot(g.x1(node) - y.first, g.x2(node) - y.second);
  return d > 0.0 ? std::pow(d, -gamma) : 0.0;
}

}  // namespace

SymmetryReport symmetry_report(const Field& u) {
  const Grid& g = u.grid();
  require_symmetric(g);
  SymmetryReport rep;

  const double norm = l2_norm(u);
  if (norm > 0.0) rep.asymmetry_x1 = l2_norm(u - reflect_field(u, 0.0)) / norm;

  if (g.domain().kind == DomainKind::disk) {
    const double umax = u.max_abs();
    std::map<long long, std::pair<double, double>> groups;
    for (int n : g.interior_nodes()) {
      if (!g.is_deep_interior(n)) continue;
      const double r2 = (g.x1(n) * g.x1(n) + g.x2(n) * g.x2(n)) / (g.h() * g.h());
      const long long key = std::llround(4.0 * r2);
      auto [it, fresh] = groups.try_emplace(key, u[n], u[n]);
      if (!fresh) {
        it->second.first = std::min(it->second.first, u[n]);
        it->second.second = std::max(it->second.second, u[n]);
      }
    }
    double spread = 0.0;
    for (const auto& [key, mm] : groups) spread = std::max(spread, mm.second - mm.first);
    rep.radial_deviation = umax > 0.0 ? spread / umax : 0.0;
  }

  const GradientField gf = gradient_field(u);
  double gmax = 0.0, defect = 0.0;
  for (int n : g.interior_nodes()) {
    const auto k = static_cast<std::size_t>(n);
    gmax = std::max(gmax, gf.magnitude[k]);
    if (g.x1(n) < 0.0) defect = std::max(defect, -gf.g1[k]);
  }
  rep.monotonicity_defect = gmax > 0.0 ? defect / gmax : 0.0;
  return rep;
}

MovingPlaneReport moving_plane_sweep(const Field& u, int lambda_count) {
  const Grid& g = u.grid();
  require_symmetric(g);
  if (lambda_count < 1) throw PreconditionError("need at least one lambda");
  const double half_h = 0.5 * g.h();
  const double lo = 0.5 * g.domain().x_lo;

  MovingPlaneReport rep;
  for (int k = 0; k < lambda_count; ++k) {
    const double target = lambda_count == 1 ? 0.0 : lo * (1.0 - static_cast<double>(k) / (lambda_count - 1));
    double lambda = std::round(target / half_h) * half_h;
    if (lambda < lo) lambda += half_h;
    if (lambda > 0.0) lambda = 0.0;
    if (!rep.lambdas.empty() && std::abs(rep.lambdas.back() - lambda) < 1e-12) continue;
    rep.lambdas.push_back(lambda);
  }
  for (double lambda : rep.lambdas) {
    const Field ul = reflect_field(u, lambda);
    double defect = 0.0;
    for (int n : g.interior_nodes())
      if (g.x1(n) < lambda - 1e-12) defect = std::max(defect, u[n] - ul[n]);
    rep.defects.push_back(defect);
    rep.overall_max = std::max(rep.overall_max, defect);
  }
  return rep;
}

double CriticalSetReport::y_stability_ratio() const {
  if (inverse_gradient_by_y.empty()) return 1.0;
  const auto [mn, mx] = std::minmax_element(inverse_gradient_by_y.begin(), inverse_gradient_by_y.end());
  return *mn > 0.0 ? *mx / *mn : std::numeric_limits<double>::infinity();
}

CriticalSetReport critical_set_report(const Field& u, double p, const std::vector<double>& deltas, double r_exp,
                                      double beta, double gamma,
                                      const std::vector<std::pair<double, double>>& y_samples) {
  const Grid& g = u.grid();
  if (!(p > 1.0)) throw PreconditionError("p must exceed 1");
  if (!(r_exp > 0.0 && r_exp < 1.0)) throw PreconditionError("r must lie in (0,1)");
  if (!(beta >= 0.0 && beta < 1.0)) throw PreconditionError("beta must lie in [0,1)");
  if (g.dim() <= 2 ? gamma != 0.0 : !(gamma >= 0.0 && gamma < g.dim() - 2.0))
    throw PreconditionError("gamma must be 0 in one and two dimensions");

  CriticalSetReport rep;
  rep.p = p;
  rep.r_exp = r_exp;
  rep.beta = beta;
  rep.gamma = gamma;
  rep.deltas = deltas;
  rep.y_samples = y_samples.empty() ? std::vector<std::pair<double, double>>{{0.0, 0.0}} : y_samples;

  const GradientField gf = gradient_field(u);
  const auto& nodes = g.interior_nodes();
  std::size_t noncritical = 0;
  for (int n : nodes)
    if (gf.magnitude[static_cast<std::size_t>(n)] > 0.0) ++noncritical;
  if (noncritical == 0) throw DegenerateFieldError("gradient vanishes at every interior node");

  for (double d : deltas) {
    std::size_t below = 0;
    for (int n : nodes)
      if (gf.magnitude[static_cast<std::size_t>(n)] < d) ++below;
    rep.fractions.push_back(static_cast<double>(below) / static_cast<double>(nodes.size()));
  }

  const double inv_exp = (p - 1.0) * r_exp;
  for (const auto& y : rep.y_samples) {
    double inv = 0.0, hess = 0.0;
    for (int n : nodes) {
      const double m = gf.magnitude[static_cast<std::size_t>(n)];
      if (m <= 0.0) continue;
      const double w = distance_weight(g, n, y, gamma);
      inv += std::pow(m, -inv_exp) * w;
      if (g.is_deep_interior(n)) hess += std::pow(m, p - 2.0 - beta) * hessian_sq(u, n) * w;
    }
    rep.inverse_gradient_by_y.push_back(inv * g.cell_measure());
    rep.hessian_by_y.push_back(hess * g.cell_measure());
  }
  rep.inverse_gradient_integral = *std::max_element(rep.inverse_gradient_by_y.begin(), rep.inverse_gradient_by_y.end());
  rep.hessian_integral = *std::max_element(rep.hessian_by_y.begin(), rep.hessian_by_y.end());
  return rep;
}

double weighted_rayleigh_ratio(const Field& v, const Field& u_weight, double p) {
  if (v.grid_ptr() != u_weight.grid_ptr()) throw PreconditionError("fields live on different grids");
  const auto cv = cell_samples(v);
  const auto cu = cell_samples(u_weight);
  double grad = 0.0;
  for (std::size_t c = 0; c < cv.size(); ++c) {
    const double rho = p == 2.0 ? 1.0 : std::pow(cu[c].s, 0.5 * (p - 2.0));
    grad += rho * cv[c].s;
  }
  grad *= v.grid().cell_measure();
  const double num = l2_norm(v);
  if (grad <= 0.0) return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return num / std::sqrt(grad);
}

double weighted_poincare_constant(const Field& u_weight, double p, int trials, std::uint64_t seed) {
  if (!(p >= 2.0)) throw PreconditionError("weighted Poincare estimate needs p >= 2");
  if (trials < 32) throw PreconditionError("need at least 32 trials");
  const Grid& g = u_weight.grid();
  if (p > 2.0) {
    bool any = false;
    for (const auto& c : cell_samples(u_weight)) any = any || c.s > 0.0;
    if (!any) throw DegenerateFieldError("weight |grad u|^{p-2} vanishes identically");
  }

  const Domain& d = g.domain();
  const double Lx = d.x_hi - d.x_lo;
  const double Ly = g.dim() == 2 ? d.y_hi - d.y_lo : 1.0;
  const double pi = std::numbers::pi;
  auto mode = [&](int k1, int k2, double x, double y) {
    const double sx = std::sin(k1 * pi * (x - d.x_lo) / Lx);
    return g.dim() == 1 ? sx : sx * std::sin(k2 * pi * (y - d.y_lo) / Ly);
  };

  const int kmax = g.dim() == 1 ? 8 : 4;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double best = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> coef;
    if (t > 0) {
      for (int k1 = 1; k1 <= kmax; ++k1)
        for (int k2 = 1; k2 <= (g.dim() == 1 ? 1 : kmax); ++k2) coef.push_back(normal(rng) / (k1 * k2));
    }
    const Field v = Field::sample(u_weight.grid_ptr(), [&](double x, double y) {
      if (t == 0) return mode(1, 1, x, y);
      double s = 0.0;
      std::size_t c = 0;
      for (int k1 = 1; k1 <= kmax; ++k1)
        for (int k2 = 1; k2 <= (g.dim() == 1 ? 1 : kmax); ++k2) s += coef[c++] * mode(k1, k2, x, y);
      return s;
    });
    best = std::max(best, weighted_rayleigh_ratio(v, u_weight, p));
  }
  return best;
}

std::vector<char> ball_mask(const Grid& grid, double cx, double cy, double radius) {
  std::vector<char> mask(static_cast<std::size_t>(grid.node_count()), 0);
  for (int n : grid.interior_nodes())
    if (std::hypot(grid.x1(n) - cx, grid.x2(n) - cy) <= radius) mask[static_cast<std::size_t>(n)] = 1;
  return mask;
}

ComparisonReport comparison_experiment(const Field& u, const Field& v, const std::vector<char>& mask,
                                       const ComparisonOptions& opts) {
  if (u.grid_ptr() != v.grid_ptr()) throw PreconditionError("fields live on different grids");
  const Grid& g = u.grid();
  if (static_cast<int>(mask.size()) != g.node_count()) throw PreconditionError("mask size does not match grid");

  std::vector<int> members;
  for (int n = 0; n < g.node_count(); ++n) {
    if (!mask[static_cast<std::size_t>(n)]) continue;
    if (!g.is_interior(n)) throw PreconditionError("mask must contain interior nodes only");
    members.push_back(n);
  }
  if (members.empty()) throw PreconditionError("empty mask");

  auto neighbours = [&](int n) {
    std::vector<int> out;
    const int i = g.node_i(n), j = g.node_j(n);
    if (i > 0) out.push_back(g.node(i - 1, j));
    if (i + 1 < g.nx()) out.push_back(g.node(i + 1, j));
    if (g.dim() == 2) {
      if (j > 0) out.push_back(g.node(i, j - 1));
      if (j + 1 < g.ny()) out.push_back(g.node(i, j + 1));
    }
    return out;
  };

  // Connectivity by flood fill from the first member.
  std::vector<char> seen(mask.size(), 0);
  std::vector<int> stack{members.front()};
  seen[static_cast<std::size_t>(members.front())] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    ++reached;
    for (int m : neighbours(n)) {
      const auto k = static_cast<std::size_t>(m);
      if (mask[k] && !seen[k]) {
        seen[k] = 1;
        stack.push_back(m);
      }
    }
  }
  if (reached != members.size()) throw PreconditionError("mask is not connected");

  ComparisonReport rep;
  rep.subdomain_measure = static_cast<double>(members.size()) * g.cell_measure();
  rep.theta = opts.theta_fraction * static_cast<double>(g.interior_count()) * g.cell_measure();
  rep.small_domain = rep.subdomain_measure <= rep.theta;

  const double vmax = v.max_abs();
  const double order_tol = 1e-12 * std::max(1.0, vmax);
  rep.boundary_ordered = true;
  for (int n : members)
    for (int m : neighbours(n))
      if (!mask[static_cast<std::size_t>(m)] && u[m] > v[m] + order_tol) rep.boundary_ordered = false;
  for (int n : members) rep.interior_violation = std::max(rep.interior_violation, u[n] - v[n]);

  rep.verified_stationary = opts.u_residual && opts.v_residual && *opts.u_residual <= opts.stationarity_tol &&
                            *opts.v_residual <= opts.stationarity_tol;
  rep.applicable = rep.boundary_ordered && rep.small_domain && rep.verified_stationary;
  rep.passes = !rep.applicable || rep.interior_violation <= 1e-8 * vmax;

  std::ostringstream note;
  if (!rep.verified_stationary) note << "inputs are not verified stationary solutions; ";
  if (!rep.boundary_ordered) note << "boundary ordering fails, comparison inapplicable; ";
  if (!rep.small_domain) note << "subdomain larger than theta; ";
  rep.note = note.str();
  if (!rep.note.empty()) rep.note.resize(rep.note.size() - 2);
  return rep;
}

}  // namespace qlflow
