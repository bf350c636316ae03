#include "qlflow/operators.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "qlflow/errors.hpp"

namespace qlflow {

namespace {

// Lattice cell: 2 corners in 1D, 4 in 2D ordered (i,j), (i+1,j), (i,j+1), (i+1,j+1).
struct Cell {
  int count = 0;
  std::array<int, 4> nodes{};
};

// Hessian of the squared cell gradient s with respect to the corner values,
// in units of 1/h^2.
constexpr double kTwoM2d[4][4] = {{2, -1, -1, 0}, {-1, 2, 0, -1}, {-1, 0, 2, -1}, {0, -1, -1, 2}};
constexpr double kTwoM1d[2][2] = {{2, -2}, {-2, 2}};

template <class Fn>
void for_each_cell(const Grid& g, Fn&& fn) {
  Cell c;
  if (g.dim() == 1) {
    c.count = 2;
    for (int i = 0; i + 1 < g.nx(); ++i) {
      c.nodes[0] = g.node(i, 0);
      c.nodes[1] = g.node(i + 1, 0);
      if (g.is_interior(c.nodes[0]) || g.is_interior(c.nodes[1])) fn(c);
    }
    return;
  }
  c.count = 4;
  for (int j = 0; j + 1 < g.ny(); ++j)
    for (int i = 0; i + 1 < g.nx(); ++i) {
      c.nodes = {g.node(i, j), g.node(i + 1, j), g.node(i, j + 1), g.node(i + 1, j + 1)};
      if (g.is_interior(c.nodes[0]) || g.is_interior(c.nodes[1]) || g.is_interior(c.nodes[2]) ||
          g.is_interior(c.nodes[3]))
        fn(c);
    }
}

double two_m(const Grid& g, int a, int b) {
  const double inv_h2 = 1.0 / (g.h() * g.h());
  return (g.dim() == 1 ? kTwoM1d[a][b] : kTwoM2d[a][b]) * inv_h2;
}

// Local corner values, mean, ds/du and s for one cell.
struct LocalState {
  std::array<double, 4> u{};
  std::array<double, 4> ds{};
  double mean = 0.0;
  double s = 0.0;
  double m = 0.0;  // weight of each corner in the mean
};

LocalState local_state(const Grid& g, const Field& u, const Cell& c) {
  LocalState st;
  st.m = 1.0 / c.count;
  for (int a = 0; a < c.count; ++a) {
    st.u[a] = u[c.nodes[a]];
    st.mean += st.m * st.u[a];
  }
  for (int a = 0; a < c.count; ++a) {
    double acc = 0.0;
    for (int b = 0; b < c.count; ++b) acc += two_m(g, a, b) * st.u[b];
    st.ds[a] = acc;
  }
  for (int a = 0; a < c.count; ++a) st.s += 0.5 * st.u[a] * st.ds[a];
  if (st.s < 0.0) st.s = 0.0;  // roundoff on flat cells
  return st;
}

// Psi(s) = (s + eps^2)^{p/2} - eps^p and its first two derivatives in s.
struct Weight {
  double p, eps2, eps_p;
  bool quadratic;

  Weight(double p_, double eps) : p(p_), eps2(eps * eps), eps_p(std::pow(eps, p_)), quadratic(p_ == 2.0) {}

  double psi(double s) const { return quadratic ? s : std::pow(s + eps2, 0.5 * p) - eps_p; }
  double dpsi(double s) const { return quadratic ? 1.0 : 0.5 * p * std::pow(s + eps2, 0.5 * p - 1.0); }
  double d2psi(double s) const {
    return quadratic ? 0.0 : 0.5 * p * (0.5 * p - 1.0) * std::pow(s + eps2, 0.5 * p - 2.0);
  }
  /// (s + eps^2)^{(p-2)/2}
  double w(double s) const { return quadratic ? 1.0 : std::pow(s + eps2, 0.5 * p - 1.0); }
};

[[noreturn]] void non_finite(const char* what, int node) {
  std::ostringstream msg;
  msg << what << " is not finite near node " << node;
  throw EvaluationError(msg.str());
}

void check_same_grid(const Field& u, const Field& v) {
  if (u.grid_ptr() != v.grid_ptr()) throw PreconditionError("fields live on different grids");
}

}  // namespace

RegularizationParams RegularizationParams::defaults_for(const Grid& grid) {
  return RegularizationParams{1e-6 * grid.domain().extent() / grid.h()};
}

void RegularizationParams::validate(double p) const {
  if (!(eps >= 0.0)) throw PreconditionError("eps must be nonnegative");
  if (eps == 0.0 && p != 2.0) throw PreconditionError("eps = 0 is only allowed for p = 2");
}

double energy(const Field& u, const CoefficientModel& cm, const NonlinearityModel& nm,
              const RegularizationParams& reg) {
  reg.validate(nm.p);
  const Grid& g = u.grid();
  const Weight wt(nm.p, reg.eps);
  double grad_part = 0.0;
  for_each_cell(g, [&](const Cell& c) {
    const LocalState st = local_state(g, u, c);
    const double e = cm.a(st.mean) * wt.psi(st.s);
    if (!std::isfinite(e)) non_finite("energy density", c.nodes[0]);
    grad_part += e;
  });
  double reaction = 0.0;
  for (int n : g.interior_nodes()) {
    const double F = nm.bigF(u[n]);
    if (!std::isfinite(F)) non_finite("F(u)", n);
    reaction += F;
  }
  return g.cell_measure() * (grad_part / nm.p - reaction);
}

double energy_directional_derivative(const Field& u, const Field& phi, const CoefficientModel& cm,
                                     const NonlinearityModel& nm, const RegularizationParams& reg) {
  reg.validate(nm.p);
  check_same_grid(u, phi);
  const Grid& g = u.grid();
  const Weight wt(nm.p, reg.eps);
  double diffusion = 0.0, lower = 0.0;
  for_each_cell(g, [&](const Cell& c) {
    const LocalState st = local_state(g, u, c);
    double grad_dot = 0.0, phi_mean = 0.0;
    for (int a = 0; a < c.count; ++a) {
      grad_dot += 0.5 * st.ds[a] * phi[c.nodes[a]];
      phi_mean += st.m * phi[c.nodes[a]];
    }
    diffusion += cm.a(st.mean) * wt.w(st.s) * grad_dot;
    if (!cm.constant) lower += cm.a1(st.mean) * wt.psi(st.s) * phi_mean;
  });
  double reaction = 0.0;
  for (int n : g.interior_nodes()) reaction += nm.f(u[n]) * phi[n];
  const double out = g.cell_measure() * (diffusion + lower / nm.p - reaction);
  if (!std::isfinite(out)) non_finite("directional derivative", g.interior_nodes().front());
  return out;
}

Field residual(const Field& u, const CoefficientModel& cm, const NonlinearityModel& nm,
               const RegularizationParams& reg) {
  reg.validate(nm.p);
  const Grid& g = u.grid();
  const Weight wt(nm.p, reg.eps);
  Field r = Field::zeros(u.grid_ptr());
  for_each_cell(g, [&](const Cell& c) {
    const LocalState st = local_state(g, u, c);
    const double aw = cm.a(st.mean) * wt.w(st.s);
    const double lower = cm.constant ? 0.0 : cm.a1(st.mean) * wt.psi(st.s) / nm.p * st.m;
    for (int a = 0; a < c.count; ++a) {
      const int n = c.nodes[a];
      if (g.is_interior(n)) r[n] += 0.5 * aw * st.ds[a] + lower;
    }
  });
  for (int n : g.interior_nodes()) {
    r[n] -= nm.f(u[n]);
    if (!std::isfinite(r[n])) non_finite("residual", n);
  }
  return r;
}

SparseMatrix residual_jacobian(const Field& u, const CoefficientModel& cm, const NonlinearityModel& nm,
                               const RegularizationParams& reg, const HessianOptions& opts) {
  reg.validate(nm.p);
  const Grid& g = u.grid();
  const Weight wt(nm.p, reg.eps);
  const double p = nm.p;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(g.interior_count()) * (g.dim() == 1 ? 3 : 9) * 2);

  for_each_cell(g, [&](const Cell& c) {
    const LocalState st = local_state(g, u, c);
    const double a = cm.a(st.mean);
    const double psi = wt.psi(st.s);
    const double dpsi = wt.dpsi(st.s);
    double d2psi = wt.d2psi(st.s);
    if (opts.freeze_singular && p < 2.0 && st.s < wt.eps2) d2psi = 0.0;
    const double a1 = cm.constant ? 0.0 : cm.a1(st.mean);
    const double a2 = cm.constant ? 0.0 : cm.a2(st.mean);
    const double m = st.m;
    for (int i = 0; i < c.count; ++i) {
      const int di = g.dof(c.nodes[i]);
      if (di < 0) continue;
      for (int j = 0; j < c.count; ++j) {
        const int dj = g.dof(c.nodes[j]);
        if (dj < 0) continue;
        double hij = a * (d2psi * st.ds[i] * st.ds[j] + dpsi * two_m(g, i, j));
        if (!cm.constant) hij += a2 * psi * m * m + a1 * dpsi * m * (st.ds[i] + st.ds[j]);
        trip.emplace_back(di, dj, hij / p);
      }
    }
  });
  for (int n : g.interior_nodes()) {
    const int d = g.dof(n);
    trip.emplace_back(d, d, -nm.f1(u[n]));
  }
  SparseMatrix J(g.interior_count(), g.interior_count());
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

SparseMatrix frozen_diffusion_matrix(const Field& u, const CoefficientModel& cm, double p,
                                     const RegularizationParams& reg) {
  reg.validate(p);
  const Grid& g = u.grid();
  const Weight wt(p, reg.eps);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(g.interior_count()) * (g.dim() == 1 ? 3 : 9) * 2);
  for_each_cell(g, [&](const Cell& c) {
    double coeff = 1.0;
    if (!(cm.constant && wt.quadratic)) {
      const LocalState st = local_state(g, u, c);
      coeff = cm.a(st.mean) * wt.w(st.s);
    }
    for (int i = 0; i < c.count; ++i) {
      const int di = g.dof(c.nodes[i]);
      if (di < 0) continue;
      for (int j = 0; j < c.count; ++j) {
        const int dj = g.dof(c.nodes[j]);
        if (dj < 0) continue;
        trip.emplace_back(di, dj, 0.5 * coeff * two_m(g, i, j));
      }
    }
  });
  SparseMatrix K(g.interior_count(), g.interior_count());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

Field first_order_term(const Field& u, const CoefficientModel& cm, double p, const RegularizationParams& reg) {
  const Grid& g = u.grid();
  Field out = Field::zeros(u.grid_ptr());
  if (cm.constant) return out;
  const Weight wt(p, reg.eps);
  for_each_cell(g, [&](const Cell& c) {
    const LocalState st = local_state(g, u, c);
    const double v = cm.a1(st.mean) * wt.psi(st.s) / p * st.m;
    for (int a = 0; a < c.count; ++a)
      if (g.is_interior(c.nodes[a])) out[c.nodes[a]] += v;
  });
  return out;
}

std::vector<CellSample> cell_samples(const Field& u) {
  const Grid& g = u.grid();
  std::vector<CellSample> out;
  for_each_cell(g, [&](const Cell& c) {
    const LocalState st = local_state(g, u, c);
    out.push_back({st.s, st.mean});
  });
  return out;
}

}  // namespace qlflow
