#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "qlflow/errors.hpp"
#include "qlflow/stationary_solver.hpp"

using namespace qlflow;

TEST_SUITE("stationary_solver") {
  TEST_CASE("one-dimensional torsion") {
    const auto g = build_grid(Domain::interval(0, 1), 128);
    const auto r = solve_stationary(Field::zeros(g), make_coefficient("const"), make_nonlinearity("constant:1", 1, 2.0),
                                    {0.0});
    REQUIRE(r.converged);
    CHECK(r.z.max_abs() == doctest::Approx(0.125).epsilon(1e-3));
    for (int n : g->interior_nodes()) {
      const double x = g->x1(n);
      CHECK(r.z[n] == doctest::Approx(x * (1 - x) / 2).epsilon(1e-9));
    }
  }

  TEST_CASE("p = 3 torsion on the disk") {
    const auto g = build_grid(Domain::disk(1), 64);
    const auto cm = make_coefficient("const");
    const auto nm = make_nonlinearity("constant:1", 2, 3.0);
    const auto reg = RegularizationParams::defaults_for(*g);
    const auto r = solve_stationary(Field::zeros(g), cm, nm, reg);
    REQUIRE(r.converged);
    CHECK(r.z.max_abs() == doctest::Approx(2.0 / 3.0 * std::sqrt(0.5)).epsilon(0.02));
    CHECK(r.eps_path.size() == 4);
    CHECK(r.eps_path.back() == doctest::Approx(reg.eps));
    CHECK(verify_stationary(r.z, cm, nm, reg) <= 10 * StationaryOptions{}.tol);
    CHECK(r.z.min_interior() >= 0.0);
  }

  TEST_CASE("zero is returned immediately when it is a root") {
    const auto g = build_grid(Domain::disk(1), 24);
    const auto r = solve_stationary(Field::zeros(g), make_coefficient("quadratic"), make_nonlinearity("power:3", 2, 2.0),
                                    RegularizationParams::defaults_for(*g));
    CHECK(r.converged);
    CHECK(r.iterations == 0);
    CHECK(r.z.max_abs() == 0.0);
    CHECK(verify_stationary(r.z, make_coefficient("quadratic"), make_nonlinearity("power:3", 2, 2.0), {0.0}) == 0.0);
  }

  TEST_CASE("boundary violations are flagged") {
    const auto g = build_grid(Domain::disk(1), 32);
    const Field t = exact_p_torsion(g, 2.0);
    std::vector<double> raw(t.values().begin(), t.values().end());
    for (auto& v : raw) v += 1.0;
    const Field shifted = Field::from_values(g, raw);
    CHECK_THROWS_AS(verify_stationary(shifted, make_coefficient("const"), make_nonlinearity("constant:1", 2, 2.0), {0.0}),
                    BoundaryViolation);
  }

  TEST_CASE("exact p-torsion profile") {
    const auto g = build_grid(Domain::disk(1), 64);
    int centre = -1;
    for (int n : g->interior_nodes())
      if (g->x1(n) == 0.0 && g->x2(n) == 0.0) centre = n;
    REQUIRE(centre >= 0);
    CHECK(exact_p_torsion(g, 2.0)[centre] == doctest::Approx(0.25));
    CHECK(exact_p_torsion(g, 3.0)[centre] == doctest::Approx(0.4714).epsilon(1e-4));
    const Field t2 = exact_p_torsion(g, 2.0);
    for (int n : g->interior_nodes()) {
      const double r2 = g->x1(n) * g->x1(n) + g->x2(n) * g->x2(n);
      CHECK(t2[n] == doctest::Approx((1 - r2) / 4));
    }
    const auto big = build_grid(Domain::disk(2), 32);
    for (double p : {1.5, 2.0, 3.0}) {
      const Field e = exact_p_torsion(big, p);
      CHECK(e.boundary_violation() == 0.0);
      CHECK(e.min_interior() > 0.0);
    }
    CHECK_THROWS_AS(exact_p_torsion(build_grid(Domain::interval(0, 1), 16), 2.0), PreconditionError);
    CHECK_THROWS_AS(exact_p_torsion(g, 1.0), PreconditionError);
  }

  TEST_CASE("negative guesses are rejected") {
    const auto g = build_grid(Domain::interval(0, 1), 16);
    const Field neg = Field::sample(g, [](double, double) { return -1.0; });
    CHECK_THROWS_AS(solve_stationary(neg, make_coefficient("const"), make_nonlinearity("constant:1", 1, 2.0), {0.0}),
                    PreconditionError);
  }

  TEST_CASE("non-convergence is reported, not thrown") {
    const auto g = build_grid(Domain::disk(1), 32);
    StationaryOptions opts;
    opts.max_iter = 1;
    opts.allow_descent = false;
    const auto r = solve_stationary(Field::zeros(g), make_coefficient("const"), make_nonlinearity("constant:1", 2, 3.0),
                                    RegularizationParams::defaults_for(*g), opts);
    CHECK_FALSE(r.converged);
    CHECK_FALSE(r.message.empty());
    CHECK(r.residual_norm > opts.tol);
  }

  TEST_CASE("positive steady state of the cubic problem") {
    const auto g = build_grid(Domain::disk(1), 48);
    const Field guess = 3.6 * Field::sample(g, [](double x, double y) { return 1 - x * x - y * y; });
    const auto cm = make_coefficient("const");
    const auto nm = make_nonlinearity("power:3", 2, 2.0);
    const auto r = solve_stationary(guess, cm, nm, {0.0});
    REQUIRE(r.converged);
    CHECK(r.z.max_abs() > 1.0);
    CHECK(r.z.min_interior() > 0.0);
    CHECK(verify_stationary(r.z, cm, nm, {0.0}) <= 10 * StationaryOptions{}.tol);
  }

  TEST_CASE("property: torsion solutions scale with the load") {
    gen::Gen rg(51);
    for (int k = 0; k < 8; ++k) {
      CAPTURE(k);
      const double p = rg.pick(std::vector<double>{2.0, 2.5, 3.0});
      const double c = rg.uniform(0.5, 3.0);
      const auto g = build_grid(Domain::disk(1), 24);
      const auto cm = make_coefficient("const");
      const auto reg = RegularizationParams::defaults_for(*g);
      const auto r1 = solve_stationary(Field::zeros(g), cm, make_nonlinearity("constant:1", 2, p), reg);
      const auto rc = solve_stationary(Field::zeros(g), cm, make_nonlinearity("constant:" + std::to_string(c), 2, p), reg);
      REQUIRE(r1.converged);
      REQUIRE(rc.converged);
      // -Laplace_p (c^{1/(p-1)} u) = c (-Laplace_p u) up to the eps regularization.
      const double s = std::pow(c, 1.0 / (p - 1.0));
      CHECK(rc.z.max_abs() == doctest::Approx(s * r1.z.max_abs()).epsilon(1e-4));
    }
  }
}
