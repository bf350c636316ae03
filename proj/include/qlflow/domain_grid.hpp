#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace qlflow {

enum class DomainKind { interval, rectangle, disk };

/// Bounded domain symmetric (or not) with respect to {x1 = 0}.
struct Domain {
  DomainKind kind = DomainKind::interval;
  double x_lo = 0.0, x_hi = 1.0;
  double y_lo = 0.0, y_hi = 0.0;
  double radius = 0.0;

  static Domain interval(double x_lo, double x_hi);
  static Domain rectangle(double x_lo, double x_hi, double y_lo, double y_hi);
  static Domain disk(double radius);

  int dim() const { return kind == DomainKind::interval ? 1 : 2; }
  /// Extent along x1, the axis the resolution refers to.
  double extent() const { return x_hi - x_lo; }
  double measure() const;
  bool symmetric_in_x1() const;
  std::string describe() const;
};

/// Uniform node lattice over the domain's bounding box. A disk is a masked
/// square lattice: interior nodes lie strictly inside the circle and the first
/// exterior layer carries the Dirichlet value.
class Grid {
public:
  Grid(Domain domain, int resolution);

  const Domain& domain() const { return domain_; }
  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double h() const { return h_; }
  double cell_measure() const { return cell_measure_; }
  int node_count() const { return nx_ * ny_; }
  int node(int i, int j) const { return i + nx_ * j; }
  int node_i(int node) const { return node % nx_; }
  int node_j(int node) const { return node / nx_; }
  double x1(int node) const { return x0_ + h_ * node_i(node); }
  double x2(int node) const { return dim_ == 1 ? 0.0 : y0_ + h_ * node_j(node); }
  double x1_of_index(int i) const { return x0_ + h_ * i; }
  double x0() const { return x0_; }
  double y0() const { return y0_; }

  bool is_interior(int node) const { return dof_[static_cast<std::size_t>(node)] >= 0; }
  /// Unknown index of an interior node, -1 otherwise.
  int dof(int node) const { return dof_[static_cast<std::size_t>(node)]; }
  int interior_count() const { return static_cast<int>(interior_.size()); }
  const std::vector<int>& interior_nodes() const { return interior_; }

  /// Interior node with every 3x3 lattice neighbour interior as well.
  bool is_deep_interior(int node) const;

private:
  Domain domain_;
  int resolution_ = 0;
  int dim_ = 1;
  int nx_ = 0, ny_ = 1;
  double h_ = 0.0, x0_ = 0.0, y0_ = 0.0, cell_measure_ = 0.0;
  std::vector<int> dof_;
  std::vector<int> interior_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Uniform grid with spacing extent/resolution; throws PreconditionError when
/// resolution < 8 or no interior node survives.
GridPtr build_grid(const Domain& domain, int resolution);

/// Nodal scalar field. Non-interior nodes hold the Dirichlet value 0 for fields
/// built through zeros/sample/from_interior; from_values stores what it is given.
class Field {
public:
  Field() = default;
  static Field zeros(GridPtr grid);
  static Field sample(GridPtr grid, const std::function<double(double, double)>& fn);
  static Field from_values(GridPtr grid, std::vector<double> values);
  static Field from_interior(GridPtr grid, const Eigen::VectorXd& interior);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return v_; }
  std::span<double> values() { return v_; }
  double operator[](int node) const { return v_[static_cast<std::size_t>(node)]; }
  double& operator[](int node) { return v_[static_cast<std::size_t>(node)]; }

  Eigen::VectorXd interior_vector() const;
  void pin_boundary();
  /// Largest |value| on non-interior nodes.
  double boundary_violation() const;
  double max_abs() const;
  double min_interior() const;
  double max_interior() const;
  bool all_finite() const;

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }

private:
  Field(GridPtr grid, std::vector<double> v) : grid_(std::move(grid)), v_(std::move(v)) {}
  GridPtr grid_;
  std::vector<double> v_;
};

/// Nodal gradient: central differences where both lattice neighbours are
/// interior, one-sided towards the interior neighbour on the fringe.
struct GradientField {
  GridPtr grid;
  std::vector<double> g1, g2, magnitude;
};

GradientField gradient_field(const Field& u);

/// Sum of values times h^n over interior nodes.
double integrate(const Grid& grid, std::span<const double> values);
double integrate(const Field& g);

double lp_norm(const Field& u, double p);
double l2_norm(const Field& u);
/// (int |u|^p + int |grad u|^p)^(1/p) with the nodal gradient.
double norm_W1p(const Field& u, double p);
double distance_W1p(const Field& u, const Field& v, double p);

/// u_lambda(x) = u(2 lambda - x1, x2) by linear interpolation along x1;
/// reflections leaving the lattice read the Dirichlet value.
Field reflect_field(const Field& u, double lambda);

}  // namespace qlflow
