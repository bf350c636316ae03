#include "qlflow/domain_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qlflow/errors.hpp"

namespace qlflow {

Domain Domain::interval(double x_lo, double x_hi) {
  if (!(x_hi > x_lo)) throw PreconditionError("interval needs x_lo < x_hi");
  Domain d;
  d.kind = DomainKind::interval;
  d.x_lo = x_lo;
  d.x_hi = x_hi;
  return d;
}

Domain Domain::rectangle(double x_lo, double x_hi, double y_lo, double y_hi) {
  if (!(x_hi > x_lo) || !(y_hi > y_lo)) throw PreconditionError("rectangle needs lo < hi on both axes");
  Domain d;
  d.kind = DomainKind::rectangle;
  d.x_lo = x_lo;
  d.x_hi = x_hi;
  d.y_lo = y_lo;
  d.y_hi = y_hi;
  return d;
}

Domain Domain::disk(double radius) {
  if (!(radius > 0.0)) throw PreconditionError("disk radius must be positive");
  Domain d;
  d.kind = DomainKind::disk;
  d.radius = radius;
  d.x_lo = d.y_lo = -radius;
  d.x_hi = d.y_hi = radius;
  return d;
}

double Domain::measure() const {
  switch (kind) {
    case DomainKind::interval: return x_hi - x_lo;
    case DomainKind::rectangle: return (x_hi - x_lo) * (y_hi - y_lo);
    case DomainKind::disk: return std::numbers::pi * radius * radius;
  }
  return 0.0;
}

bool Domain::symmetric_in_x1() const {
  if (kind == DomainKind::disk) return true;
  return std::abs(x_lo + x_hi) <= 1e-12 * (x_hi - x_lo);
}

std::string Domain::describe() const {
  std::ostringstream s;
  s.precision(17);
  switch (kind) {
    case DomainKind::interval: s << "interval(" << x_lo << "," << x_hi << ")"; break;
    case DomainKind::rectangle: s << "rectangle(" << x_lo << "," << x_hi << "," << y_lo << "," << y_hi << ")"; break;
    case DomainKind::disk: s << "disk(" << radius << ")"; break;
  }
  return s.str();
}

Grid::Grid(Domain domain, int resolution) : domain_(domain), resolution_(resolution) {
  if (resolution < 8) throw PreconditionError("resolution must be at least 8");
  dim_ = domain_.dim();
  h_ = domain_.extent() / resolution;
  x0_ = domain_.x_lo;
  nx_ = resolution + 1;
  if (dim_ == 2) {
    y0_ = domain_.y_lo;
    const double ly = domain_.y_hi - domain_.y_lo;
    const long cells = std::lround(ly / h_);
    if (cells < 2 || std::abs(cells * h_ - ly) > 1e-9 * ly)
      throw PreconditionError("rectangle y-extent must be a multiple of the x-spacing");
    ny_ = static_cast<int>(cells) + 1;
  }
  cell_measure_ = dim_ == 1 ? h_ : h_ * h_;

  dof_.assign(static_cast<std::size_t>(node_count()), -1);
  const double r2max = domain_.radius * domain_.radius * (1.0 - 1e-12);
  for (int n = 0; n < node_count(); ++n) {
    const int i = node_i(n), j = node_j(n);
    bool inside = false;
    switch (domain_.kind) {
      case DomainKind::interval: inside = i > 0 && i < nx_ - 1; break;
      case DomainKind::rectangle: inside = i > 0 && i < nx_ - 1 && j > 0 && j < ny_ - 1; break;
      case DomainKind::disk: {
        const double x = x1(n), y = x2(n);
        inside = x * x + y * y < r2max;
        break;
      }
    }
    if (inside) {
      dof_[static_cast<std::size_t>(n)] = static_cast<int>(interior_.size());
      interior_.push_back(n);
    }
  }
  if (interior_.empty()) throw PreconditionError("resolution too small to contain an interior node");
}

bool Grid::is_deep_interior(int n) const {
  if (!is_interior(n)) return false;
  const int i = node_i(n), j = node_j(n);
  const int jlo = dim_ == 1 ? 0 : -1, jhi = dim_ == 1 ? 0 : 1;
  for (int dj = jlo; dj <= jhi; ++dj)
    for (int di = -1; di <= 1; ++di) {
      const int ii = i + di, jj = j + dj;
      if (ii < 0 || ii >= nx_ || jj < 0 || jj >= ny_) return false;
      if (!is_interior(node(ii, jj))) return false;
    }
  return true;
}

GridPtr build_grid(const Domain& domain, int resolution) { return std::make_shared<const Grid>(domain, resolution); }

// Field ----------------------------------------------------------------------

Field Field::zeros(GridPtr grid) {
  const auto n = static_cast<std::size_t>(grid->node_count());
  return Field(std::move(grid), std::vector<double>(n, 0.0));
}

Field Field::sample(GridPtr grid, const std::function<double(double, double)>& fn) {
  Field u = zeros(grid);
  for (int n : grid->interior_nodes()) u[n] = fn(grid->x1(n), grid->x2(n));
  return u;
}

Field Field::from_values(GridPtr grid, std::vector<double> values) {
  if (static_cast<int>(values.size()) != grid->node_count()) throw PreconditionError("value count does not match grid");
  return Field(std::move(grid), std::move(values));
}

Field Field::from_interior(GridPtr grid, const Eigen::VectorXd& interior) {
  if (interior.size() != grid->interior_count()) throw PreconditionError("interior vector size mismatch");
  Field u = zeros(grid);
  const auto& nodes = u.grid().interior_nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) u[nodes[k]] = interior[static_cast<Eigen::Index>(k)];
  return u;
}

Eigen::VectorXd Field::interior_vector() const {
  const auto& nodes = grid_->interior_nodes();
  Eigen::VectorXd out(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) out[static_cast<Eigen::Index>(k)] = (*this)[nodes[k]];
  return out;
}

void Field::pin_boundary() {
  for (int n = 0; n < grid_->node_count(); ++n)
    if (!grid_->is_interior(n)) v_[static_cast<std::size_t>(n)] = 0.0;
}

double Field::boundary_violation() const {
  double m = 0.0;
  for (int n = 0; n < grid_->node_count(); ++n)
    if (!grid_->is_interior(n)) m = std::max(m, std::abs(v_[static_cast<std::size_t>(n)]));
  return m;
}

double Field::max_abs() const {
  double m = 0.0;
  for (int n : grid_->interior_nodes()) m = std::max(m, std::abs((*this)[n]));
  return m;
}

double Field::min_interior() const {
  double m = std::numeric_limits<double>::infinity();
  for (int n : grid_->interior_nodes()) m = std::min(m, (*this)[n]);
  return m;
}

double Field::max_interior() const {
  double m = -std::numeric_limits<double>::infinity();
  for (int n : grid_->interior_nodes()) m = std::max(m, (*this)[n]);
  return m;
}

bool Field::all_finite() const {
  return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
}

Field& Field::operator+=(const Field& o) {
  if (grid_ != o.grid_) throw PreconditionError("fields live on different grids");
  for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  if (grid_ != o.grid_) throw PreconditionError("fields live on different grids");
  for (std::size_t k = 0; k < v_.size(); ++k) v_[k] -= o.v_[k];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& x : v_) x *= s;
  return *this;
}

// Gradient and quadrature ------------------------------------------------------

namespace {

double axis_derivative(const Field& u, int n, int di, int dj) {
  const Grid& g = u.grid();
  const int i = g.node_i(n), j = g.node_j(n);
  const int ip = i + di, jp = j + dj, im = i - di, jm = j - dj;
  const bool has_p = ip >= 0 && ip < g.nx() && jp >= 0 && jp < g.ny();
  const bool has_m = im >= 0 && im < g.nx() && jm >= 0 && jm < g.ny();
  const int np = has_p ? g.node(ip, jp) : -1;
  const int nm = has_m ? g.node(im, jm) : -1;
  const bool int_p = has_p && g.is_interior(np);
  const bool int_m = has_m && g.is_interior(nm);
  const double h = g.h();
  if (int_p && int_m) return (u[np] - u[nm]) / (2.0 * h);
  if (int_p) return (u[np] - u[n]) / h;
  if (int_m) return (u[n] - u[nm]) / h;
  const double vp = has_p ? u[np] : 0.0;
  const double vm = has_m ? u[nm] : 0.0;
  return (vp - vm) / (2.0 * h);
}

}  // namespace

GradientField gradient_field(const Field& u) {
  const Grid& g = u.grid();
  GradientField gf;
  gf.grid = u.grid_ptr();
  const auto n = static_cast<std::size_t>(g.node_count());
  gf.g1.assign(n, 0.0);
  gf.g2.assign(n, 0.0);
  gf.magnitude.assign(n, 0.0);
  for (int node : g.interior_nodes()) {
    const auto k = static_cast<std::size_t>(node);
    gf.g1[k] = axis_derivative(u, node, 1, 0);
    if (g.dim() == 2) gf.g2[k] = axis_derivative(u, node, 0, 1);
    gf.magnitude[k] = std::hypot(gf.g1[k], gf.g2[k]);
  }
  return gf;
}

double integrate(const Grid& grid, std::span<const double> values) {
  if (static_cast<int>(values.size()) != grid.node_count()) throw PreconditionError("value count does not match grid");
  double sum = 0.0;
  for (int n : grid.interior_nodes()) sum += values[static_cast<std::size_t>(n)];
  return sum * grid.cell_measure();
}

double integrate(const Field& g) { return integrate(g.grid(), g.values()); }

double lp_norm(const Field& u, double p) {
  const Grid& g = u.grid();
  double sum = 0.0;
  for (int n : g.interior_nodes()) sum += std::pow(std::abs(u[n]), p);
  return std::pow(sum * g.cell_measure(), 1.0 / p);
}

double l2_norm(const Field& u) {
  const Grid& g = u.grid();
  double sum = 0.0;
  for (int n : g.interior_nodes()) sum += u[n] * u[n];
  return std::sqrt(sum * g.cell_measure());
}

double norm_W1p(const Field& u, double p) {
  if (!(p > 1.0)) throw PreconditionError("W^{1,p} norm needs p > 1");
  const Grid& g = u.grid();
  const GradientField gf = gradient_field(u);
  double sum = 0.0;
  for (int n : g.interior_nodes())
    sum += std::pow(std::abs(u[n]), p) + std::pow(gf.magnitude[static_cast<std::size_t>(n)], p);
  return std::pow(sum * g.cell_measure(), 1.0 / p);
}

double distance_W1p(const Field& u, const Field& v, double p) { return norm_W1p(u - v, p); }

Field reflect_field(const Field& u, double lambda) {
  const Grid& g = u.grid();
  const Domain& d = g.domain();
  const double tol = 1e-12 * d.extent();
  if (lambda > tol || lambda < d.x_lo - tol)
    throw PreconditionError("reflection abscissa must lie in [x_lo, 0]");

  Field out = Field::zeros(u.grid_ptr());
  for (int n : g.interior_nodes()) {
    const double xr = 2.0 * lambda - g.x1(n);
    double t = (xr - g.x0()) / g.h();
    const double tr = std::round(t);
    if (std::abs(t - tr) < 1e-9) t = tr;
    const int i0 = static_cast<int>(std::floor(t));
    const double w = t - i0;
    const int j = g.node_j(n);
    auto at = [&](int i) { return (i >= 0 && i < g.nx()) ? u[g.node(i, j)] : 0.0; };
    if (i0 < 0 || i0 >= g.nx() || (w > 0.0 && i0 + 1 >= g.nx())) continue;
    out[n] = w == 0.0 ? at(i0) : (1.0 - w) * at(i0) + w * at(i0 + 1);
  }
  return out;
}

}  // namespace qlflow
