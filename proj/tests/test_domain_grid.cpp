#include <doctest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "qlflow/domain_grid.hpp"
#include "qlflow/errors.hpp"

using namespace qlflow;
constexpr double kPi = std::numbers::pi;

TEST_SUITE("domain_grid") {
  TEST_CASE("interval lattice") {
    const auto g = build_grid(Domain::interval(0, 1), 10);
    CHECK(g->h() == doctest::Approx(0.1));
    CHECK(g->interior_count() == 9);
    CHECK(g->dim() == 1);
    CHECK(g->x1(g->interior_nodes().front()) == doctest::Approx(0.1));
  }

  TEST_CASE("square lattice") {
    const auto g = build_grid(Domain::rectangle(-1, 1, -1, 1), 16);
    CHECK(g->interior_count() == 15 * 15);
    CHECK(g->cell_measure() == doctest::Approx(0.125 * 0.125));
  }

  TEST_CASE("disk lattice counts nodes strictly inside the circle") {
    const auto g = build_grid(Domain::disk(1), 64);
    // Lattice points strictly inside a circle of radius 32 cells: pi * 32^2 up to a boundary term.
    const double area_count = kPi / (g->h() * g->h());
    CHECK(std::abs(g->interior_count() - area_count) / area_count < 0.02);
    for (int n : g->interior_nodes()) CHECK(std::hypot(g->x1(n), g->x2(n)) < 1.0);
  }

  TEST_CASE("domain validation") {
    CHECK_THROWS_AS(Domain::interval(1, 0), PreconditionError);
    CHECK_THROWS_AS(Domain::disk(0), PreconditionError);
    CHECK_THROWS_AS(Domain::rectangle(0, 1, 1, 1), PreconditionError);
    CHECK_THROWS_AS(build_grid(Domain::interval(0, 1), 4), PreconditionError);
    CHECK_THROWS_AS(build_grid(Domain::rectangle(0, 1, 0, 0.33), 16), PreconditionError);
    CHECK(Domain::disk(1).symmetric_in_x1());
    CHECK(Domain::interval(-2, 2).symmetric_in_x1());
    CHECK_FALSE(Domain::interval(0, 1).symmetric_in_x1());
    CHECK(Domain::disk(2).measure() == doctest::Approx(4 * kPi));
  }

  TEST_CASE("fields vanish off the interior") {
    const auto g = build_grid(Domain::disk(1), 24);
    const Field u = Field::sample(g, [](double, double) { return 3.0; });
    CHECK(u.boundary_violation() == 0.0);
    CHECK(u.all_finite());
    auto raw = std::vector<double>(static_cast<std::size_t>(g->node_count()), 1.0);
    Field w = Field::from_values(g, raw);
    CHECK(w.boundary_violation() == 1.0);
    w.pin_boundary();
    CHECK(w.boundary_violation() == 0.0);
    CHECK_THROWS_AS(Field::from_values(g, {1.0, 2.0}), PreconditionError);
    const Field other = Field::zeros(build_grid(Domain::disk(1), 24));
    CHECK_THROWS_AS(u + other, PreconditionError);
  }

  TEST_CASE("gradient of simple fields") {
    const auto g = build_grid(Domain::rectangle(-1, 1, -1, 1), 16);
    const auto gr = gradient_field(Field::sample(g, [](double x, double) { return x; }));
    for (int n : g->interior_nodes()) {
      const int i = g->node_i(n), j = g->node_j(n);
      if (g->is_interior(g->node(i - 1, j)) && g->is_interior(g->node(i + 1, j)))
        CHECK(gr.magnitude[static_cast<std::size_t>(n)] == doctest::Approx(1.0));
    }
    const auto zero = gradient_field(Field::zeros(g));
    for (double m : zero.magnitude) CHECK(m == 0.0);

    const auto g1 = build_grid(Domain::interval(0, 1), 128);
    const auto gs = gradient_field(Field::sample(g1, [](double x, double) { return std::sin(kPi * x); }));
    CHECK(std::abs(gs.magnitude[64]) < 1e-3);
    for (std::size_t k = 0; k < gs.magnitude.size(); ++k)
      CHECK(gs.magnitude[k] == doctest::Approx(std::hypot(gs.g1[k], gs.g2[k])));
  }

  TEST_CASE("quadrature") {
    const auto g = build_grid(Domain::interval(0, 1), 64);
    CHECK(std::abs(integrate(Field::sample(g, [](double, double) { return 1.0; })) - 1.0) <= g->h());
    CHECK(std::abs(integrate(Field::sample(g, [](double x, double) { return x; })) - 0.5) <= g->h());
    const auto d = build_grid(Domain::disk(1), 64);
    CHECK(std::abs(integrate(Field::sample(d, [](double, double) { return 1.0; })) - kPi) / kPi < 0.03);
  }

  TEST_CASE("W1p norm") {
    const auto g = build_grid(Domain::interval(0, 1), 128);
    CHECK(norm_W1p(Field::zeros(g), 2.0) == 0.0);
    // The linear field is pinned to zero at x = 1, so sample it away from the right end.
    const auto g2 = build_grid(Domain::interval(0, 1), 512);
    const Field x = Field::sample(g2, [](double s, double) { return s; });
    double sq = 0, gsq = 0;
    const auto gr = gradient_field(x);
    for (int n : g2->interior_nodes()) {
      sq += x[n] * x[n];
      gsq += gr.magnitude[static_cast<std::size_t>(n)] * gr.magnitude[static_cast<std::size_t>(n)];
    }
    CHECK(std::sqrt((sq + gsq) * g2->h()) == doctest::Approx(norm_W1p(x, 2.0)));
    CHECK(norm_W1p(x, 2.0) == doctest::Approx(std::sqrt(1.0 / 3.0 + 1.0)).epsilon(0.02));
    CHECK_THROWS_AS(norm_W1p(x, 1.0), PreconditionError);
  }

  TEST_CASE("reflection") {
    const auto g = build_grid(Domain::interval(-1, 1), 16);
    const Field even = Field::sample(g, [](double x, double) { return 1 - x * x; });
    const Field r0 = reflect_field(even, 0.0);
    for (int n : g->interior_nodes()) CHECK(r0[n] == doctest::Approx(even[n]).epsilon(1e-14));

    const Field lin = Field::sample(g, [](double x, double) { return x + 1; });
    const Field rl = reflect_field(lin, 0.0);
    for (int n : g->interior_nodes()) CHECK(rl[n] == doctest::Approx(1 - g->x1(n)));

    const Field rq = reflect_field(even, -0.25);
    int at = -1, zero = -1;
    for (int n : g->interior_nodes()) {
      if (std::abs(g->x1(n) + 0.5) < 1e-12) at = n;
      if (std::abs(g->x1(n)) < 1e-12) zero = n;
    }
    REQUIRE(at >= 0);
    CHECK(rq[at] == doctest::Approx(even[zero]));
    CHECK_THROWS_AS(reflect_field(even, 0.1), PreconditionError);
    CHECK_THROWS_AS(reflect_field(even, -1.5), PreconditionError);
  }

  TEST_CASE("property: norms are homogeneous and satisfy the triangle inequality") {
    gen::Gen rg(21);
    for (int k = 0; k < 60; ++k) {
      CAPTURE(k);
      const Domain d = rg.domain();
      const auto g = build_grid(d, rg.resolution(d));
      const Field u = rg.smooth(g, rg.uniform(-1, 1));
      const Field v = rg.smooth(g);
      const double p = rg.uniform(1.2, 4.0), c = rg.uniform(-3, 3);
      CHECK(norm_W1p(c * u, p) == doctest::Approx(std::abs(c) * norm_W1p(u, p)).epsilon(1e-12));
      CHECK(norm_W1p(u + v, p) <= (norm_W1p(u, p) + norm_W1p(v, p)) * (1 + 1e-12));
      CHECK(lp_norm(u + v, p) <= (lp_norm(u, p) + lp_norm(v, p)) * (1 + 1e-12));
      CHECK(distance_W1p(u, v, p) == doctest::Approx(distance_W1p(v, u, p)));
      CHECK(distance_W1p(u, u, p) == 0.0);
      CHECK(l2_norm(u) == doctest::Approx(lp_norm(u, 2.0)));
    }
  }

  TEST_CASE("property: reflection at the symmetry plane is an involution") {
    gen::Gen rg(22);
    for (int k = 0; k < 30; ++k) {
      const Domain d = rg.coin() ? Domain::disk(rg.uniform(0.5, 1.5)) : Domain::interval(-1, 1);
      const auto g = build_grid(d, 2 * rg.integer(6, 20));
      const Field u = rg.smooth(g);
      const Field back = reflect_field(reflect_field(u, 0.0), 0.0);
      for (int n : g->interior_nodes()) CHECK(back[n] == doctest::Approx(u[n]).epsilon(1e-12));
    }
  }
}
