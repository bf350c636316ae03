#include <doctest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "qlflow/errors.hpp"
#include "qlflow/operators.hpp"
#include "qlflow/stationary_solver.hpp"

using namespace qlflow;
constexpr double kPi = std::numbers::pi;

namespace {

Field sine(const GridPtr& g) {
  return Field::sample(g, [](double x, double) { return std::sin(kPi * x); });
}

double pairing(const Field& r, const Field& phi) {
  double s = 0;
  for (int n : r.grid().interior_nodes()) s += r[n] * phi[n];
  return s * r.grid().cell_measure();
}

// L2 norm of the residual over nodes whose 3x3 stencil is interior.
double deep_l2(const Field& r) {
  const Grid& g = r.grid();
  double s = 0;
  for (int n : g.interior_nodes())
    if (g.is_deep_interior(n)) s += r[n] * r[n];
  return std::sqrt(s * g.cell_measure());
}

}  // namespace

TEST_SUITE("operators") {
  TEST_CASE("energy of the zero field vanishes") {
    const auto g = build_grid(Domain::disk(1), 20);
    for (const char* f : {"zero", "power:3", "constant:1"}) {
      const auto nm = make_nonlinearity(f, 2, 3.0);
      CHECK(energy(Field::zeros(g), make_coefficient("quadratic"), nm, RegularizationParams::defaults_for(*g)) ==
            doctest::Approx(0.0));
    }
  }

  TEST_CASE("Dirichlet energy of sin(pi x)") {
    const auto g = build_grid(Domain::interval(0, 1), 128);
    const auto nm = make_nonlinearity("zero", 1, 2.0);
    CHECK(energy(sine(g), make_coefficient("const"), nm, {0.0}) == doctest::Approx(kPi * kPi / 4).epsilon(0.01));
    CHECK(energy(sine(g), make_coefficient("quadratic"), nm, {0.0}) ==
          doctest::Approx(5 * kPi * kPi / 16).epsilon(0.01));
  }

  TEST_CASE("directional derivative examples") {
    const auto g = build_grid(Domain::interval(0, 1), 128);
    const auto cm = make_coefficient("const");
    const auto nm = make_nonlinearity("zero", 1, 2.0);
    const Field u = sine(g);
    CHECK(energy_directional_derivative(u, u, cm, nm, {0.0}) == doctest::Approx(kPi * kPi / 2).epsilon(0.01));
    gen::Gen rg(31);
    const auto nm3 = make_nonlinearity("power:3", 1, 3.0);
    for (int k = 0; k < 5; ++k)
      CHECK(energy_directional_derivative(Field::zeros(g), rg.smooth(g), make_coefficient("quadratic"), nm3,
                                          RegularizationParams::defaults_for(*g)) == 0.0);
  }

  TEST_CASE("residual of the zero field and of sin(pi x)") {
    const auto g = build_grid(Domain::interval(0, 1), 128);
    const auto nm = make_nonlinearity("power:2", 1, 2.0);
    const Field r0 = residual(Field::zeros(g), make_coefficient("quadratic"), nm, {0.0});
    CHECK(r0.max_abs() == 0.0);
    const Field r = residual(sine(g), make_coefficient("const"), make_nonlinearity("zero", 1, 2.0), {0.0});
    CHECK(r[64] == doctest::Approx(kPi * kPi).epsilon(0.01));
  }

  TEST_CASE("p-torsion residual decreases under refinement") {
    const auto cm = make_coefficient("const");
    double prev = 0;
    for (int res : {32, 64, 128}) {
      const auto g = build_grid(Domain::disk(1), res);
      const auto nm = make_nonlinearity("constant:1", 2, 3.0);
      const double r = deep_l2(residual(exact_p_torsion(g, 3.0), cm, nm, RegularizationParams::defaults_for(*g)));
      CAPTURE(res);
      if (prev > 0) CHECK(r < prev);
      prev = r;
    }
  }

  TEST_CASE("regularization parameters") {
    const auto g = build_grid(Domain::interval(0, 1), 100);
    CHECK(RegularizationParams::defaults_for(*g).eps == doctest::Approx(1e-4));
    CHECK_NOTHROW(RegularizationParams{0.0}.validate(2.0));
    CHECK_THROWS_AS(RegularizationParams{0.0}.validate(3.0), PreconditionError);
    CHECK_THROWS_AS(RegularizationParams{-1.0}.validate(2.0), PreconditionError);
  }

  TEST_CASE("non-finite energies name the node") {
    const auto g = build_grid(Domain::interval(0, 1), 16);
    CoefficientModel cm = make_coefficient("const");
    cm.a = [](double s) { return s > 0.5 ? std::nan("") : 1.0; };
    const Field u = Field::sample(g, [](double, double) { return 1.0; });
    CHECK_THROWS_AS(energy(u, cm, make_nonlinearity("zero", 1, 2.0), {0.0}), EvaluationError);
  }

  TEST_CASE("frozen diffusion reproduces the residual at the freezing point") {
    gen::Gen rg(32);
    for (int k = 0; k < 10; ++k) {
      const Domain d = rg.domain();
      const auto g = build_grid(d, rg.resolution(d));
      const auto cm = rg.coefficient();
      const double p = rg.p();
      const auto nm = make_nonlinearity("zero", d.dim(), p);
      const RegularizationParams reg = RegularizationParams::defaults_for(*g);
      const Field u = rg.positive(g, rg.uniform(0.2, 2));
      const Eigen::VectorXd lhs = frozen_diffusion_matrix(u, cm, p, reg) * u.interior_vector() +
                                  first_order_term(u, cm, p, reg).interior_vector();
      const Eigen::VectorXd rhs = residual(u, cm, nm, reg).interior_vector();
      CHECK((lhs - rhs).norm() <= 1e-10 * (1 + rhs.norm()));
    }
  }

  TEST_CASE("property: energy gradient matches central differences") {
    gen::Gen rg(33);
    for (int k = 0; k < 20; ++k) {
      CAPTURE(k);
      const Domain d = rg.domain();
      const auto g = build_grid(d, rg.resolution(d));
      const auto cm = rg.coefficient();
      const double p = rg.p();
      const auto nm = extend_f_hat(make_nonlinearity(rg.nonlinearity(), d.dim(), p));
      const RegularizationParams reg = RegularizationParams::defaults_for(*g);
      const Field u = rg.smooth(g, 1.0), phi = rg.smooth(g);
      const double dd = energy_directional_derivative(u, phi, cm, nm, reg);
      const double t = 1e-5;
      const double fd = (energy(u + t * phi, cm, nm, reg) - energy(u - t * phi, cm, nm, reg)) / (2 * t);
      CHECK(std::abs(dd - fd) <= 1e-4 * (1 + std::abs(dd)));
      CHECK(std::abs(pairing(residual(u, cm, nm, reg), phi) - dd) <= 1e-10 * std::max(1.0, std::abs(dd)));
    }
  }

  TEST_CASE("property: the Jacobian is the derivative of the residual") {
    gen::Gen rg(34);
    for (int k = 0; k < 12; ++k) {
      CAPTURE(k);
      const Domain d = rg.domain();
      const auto g = build_grid(d, rg.resolution(d));
      const auto cm = rg.coefficient();
      const double p = rg.coin() ? 2.0 : 3.0;
      const auto nm = make_nonlinearity(rg.nonlinearity(), d.dim(), p);
      const RegularizationParams reg = RegularizationParams::defaults_for(*g);
      const Field u = rg.positive(g, 1.0);
      const Field phi = rg.positive(g, 1.0);
      const double t = 1e-6;
      const Eigen::VectorXd fd =
          (residual(u + t * phi, cm, nm, reg).interior_vector() - residual(u - t * phi, cm, nm, reg).interior_vector()) /
          (2 * t);
      const Eigen::VectorXd jv = residual_jacobian(u, cm, nm, reg) * phi.interior_vector();
      CHECK((fd - jv).norm() <= 1e-5 * (1 + jv.norm()));
    }
  }

  TEST_CASE("property: the Jacobian is symmetric") {
    gen::Gen rg(35);
    for (int k = 0; k < 10; ++k) {
      const Domain d = rg.domain();
      const auto g = build_grid(d, rg.resolution(d));
      const auto J = residual_jacobian(rg.positive(g, 1.0), rg.coefficient(),
                                       make_nonlinearity(rg.nonlinearity(), d.dim(), rg.p()),
                                       RegularizationParams::defaults_for(*g));
      const SparseMatrix diff = SparseMatrix(J.transpose()) - J;
      CHECK(diff.norm() <= 1e-10 * (1 + J.norm()));
    }
  }

  TEST_CASE("property: at p = 2 the energy does not depend on eps") {
    gen::Gen rg(36);
    for (int k = 0; k < 10; ++k) {
      const Domain d = rg.domain();
      const auto g = build_grid(d, rg.resolution(d));
      const auto cm = rg.coefficient();
      const auto nm = extend_f_hat(make_nonlinearity(rg.nonlinearity(), d.dim(), 2.0));
      const Field u = rg.smooth(g, 0.5);
      CHECK(energy(u, cm, nm, {0.0}) == doctest::Approx(energy(u, cm, nm, {rg.uniform(1e-4, 1e-1)})).epsilon(1e-12));
    }
  }
}
