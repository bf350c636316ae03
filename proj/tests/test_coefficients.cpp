#include <doctest.h>

#include <cmath>
#include <limits>

#include "generators.hpp"
#include "qlflow/coefficients.hpp"
#include "qlflow/errors.hpp"

using namespace qlflow;

namespace {

bool has_witness_at(const HypothesisReport& r, const std::string& cond, double s, double tol = 1e-12) {
  for (const auto& w : r.witnesses)
    if (w.condition == cond && std::abs(w.sample - s) <= tol) return true;
  return false;
}

}  // namespace

TEST_SUITE("coefficients") {
  TEST_CASE("quadratic diffusivity with cubic reaction satisfies every structural condition") {
    const auto cm = make_coefficient("quadratic");
    const auto nm = make_nonlinearity("power:3", 3, 2.0);
    const auto r = check_structural_hypotheses(cm, nm, 2.0, 65);
    CHECK(r.ellipticity_ok == true);
    CHECK(r.bounded_ok == true);
    CHECK(r.sign_condition_ok == true);
    CHECK(r.growth_ok == true);
    CHECK(r.positivity_ok == true);
    CHECK(r.all_ok());
    CHECK(r.witnesses.empty());
  }

  TEST_CASE("zero reaction is not strictly positive") {
    const auto r = check_structural_hypotheses(make_coefficient("const"), make_nonlinearity("zero", 2, 2.0), 2.0, 17);
    CHECK(r.ellipticity_ok == true);
    CHECK(r.sign_condition_ok == true);
    CHECK(r.positivity_ok == false);
    CHECK(has_witness_at(r, "positivity", 1.0));
  }

  TEST_CASE("decreasing diffusivity loses ellipticity near the end of the range") {
    CoefficientModel cm;
    cm.name = "1-s";
    cm.a = [](double s) { return 1.0 - s; };
    cm.a1 = [](double) { return -1.0; };
    cm.a2 = [](double) { return 0.0; };
    cm.eta = 1e-3;
    cm.cap = 10.0;
    const auto r = check_structural_hypotheses(cm, make_nonlinearity("power:2", 2, 2.0), 2.0, 33);
    CHECK(r.ellipticity_ok == false);
    double worst_s = 0, worst = -1;
    for (const auto& w : r.witnesses)
      if (w.condition == "ellipticity" && w.residual > worst) worst = w.residual, worst_s = w.sample;
    CHECK(worst_s == doctest::Approx(2.0));
    CHECK(r.sign_condition_ok == false);
  }

  TEST_CASE("non-finite function values are reported with the sample") {
    CoefficientModel cm = make_coefficient("const");
    cm.a = [](double s) { return s > 1.0 ? std::numeric_limits<double>::quiet_NaN() : 1.0; };
    CHECK_THROWS_AS(check_structural_hypotheses(cm, make_nonlinearity("zero", 2, 2.0), 2.0, 17), EvaluationError);
    try {
      check_structural_hypotheses(cm, make_nonlinearity("zero", 2, 2.0), 2.0, 17);
    } catch (const EvaluationError& e) {
      CHECK(std::string(e.what()).find("1.125") != std::string::npos);
    }
  }

  TEST_CASE("bad sampling arguments") {
    const auto cm = make_coefficient("const");
    const auto nm = make_nonlinearity("zero", 2, 2.0);
    CHECK_THROWS_AS(check_structural_hypotheses(cm, nm, 0.0, 32), PreconditionError);
    CHECK_THROWS_AS(check_structural_hypotheses(cm, nm, 1.0, 4), PreconditionError);
  }

  TEST_CASE("uniqueness window for powers in three dimensions") {
    const auto q3 = check_uniqueness_conditions(power_nonlinearity(3.0, 3, 2.0), 4.0, 64);
    CHECK(q3.superlinearity_ok == true);
    CHECK(q3.H_monotone_ok == true);
    const auto q6 = check_uniqueness_conditions(power_nonlinearity(6.0, 3, 2.0), 4.0, 64);
    CHECK(q6.H_monotone_ok == false);
    CHECK(q6.has_witness("H_monotone"));
  }

  TEST_CASE("H(s) for a power is linear with slope (n-p) - np/(q+1)") {
    const auto r = check_uniqueness_conditions(power_nonlinearity(3.0, 3, 2.0), 2.0, 32);
    REQUIRE(!r.h_values.empty());
    for (const auto& [s, h] : r.h_values) CHECK(h == doctest::Approx(s * (1.0 - 6.0 / 4.0)).epsilon(1e-9));
  }

  TEST_CASE("the equality case f = s^{p-1} is not superlinear") {
    for (double p : {1.5, 2.0, 2.5}) {
      const auto r = check_uniqueness_conditions(power_nonlinearity(p - 1.0, 3, p), 3.0, 40);
      CHECK(r.superlinearity_ok == false);
    }
  }

  TEST_CASE("vanishing reaction breaks H") {
    CHECK_THROWS_AS(check_uniqueness_conditions(make_nonlinearity("zero", 2, 2.0), 1.0, 32), EvaluationError);
  }

  TEST_CASE("zero extension of the reaction") {
    const auto nm = extend_f_hat(make_nonlinearity("power:2", 2, 2.0));
    CHECK(nm.zero_extended);
    CHECK(nm.f(-1.0) == 0.0);
    CHECK(nm.f(2.0) == doctest::Approx(4.0));
    CHECK(nm.bigF(-3.0) == 0.0);
    CHECK(nm.f1(-0.5) == 0.0);
    CHECK(nm.bigF(1.5) == doctest::Approx(1.125));
  }

  TEST_CASE("Sobolev exponent") {
    CHECK(sobolev_exponent(3, 2.0) == doctest::Approx(6.0));
    CHECK(std::isinf(sobolev_exponent(2, 2.0)));
    CHECK(std::isinf(sobolev_exponent(1, 1.5)));
    CHECK(sobolev_exponent(2, 1.5) == doctest::Approx(6.0));
    CHECK(make_nonlinearity("power:3", 3, 2.0).pstar == doctest::Approx(6.0));
  }

  TEST_CASE("catalogue names and errors") {
    CHECK_THROWS_AS(make_coefficient("cubic"), ConfigError);
    CHECK_THROWS_AS(make_nonlinearity("exp", 2, 2.0), ConfigError);
    CHECK_THROWS_AS(make_nonlinearity("power:x", 2, 2.0), ConfigError);
    CHECK_THROWS_AS(make_nonlinearity("power:-1", 2, 2.0), ConfigError);
    CHECK_THROWS_AS(make_nonlinearity("critical", 2, 2.0), ConfigError);
    CHECK_THROWS_AS(make_nonlinearity("zero", 2, 1.0), ConfigError);
    const auto crit = make_nonlinearity("critical", 3, 2.0);
    CHECK(crit.f(2.0) == doctest::Approx(32.0));
    const auto c = make_nonlinearity("constant:1.2", 2, 2.0);
    CHECK(c.f(5.0) == doctest::Approx(1.2));
    CHECK(c.bigF(2.0) == doctest::Approx(2.4));
  }

  TEST_CASE("property: derivatives agree with finite differences") {
    gen::Gen g(11);
    for (int k = 0; k < 200; ++k) {
      CAPTURE(k);
      const auto cm = g.coefficient();
      const auto nm = make_nonlinearity(g.nonlinearity(), g.integer(1, 3), g.p());
      const double s = g.uniform(0.1, 3.0), d = 1e-4;
      const double a1_fd = (cm.a(s + d) - cm.a(s - d)) / (2 * d);
      const double a2_fd = (cm.a1(s + d) - cm.a1(s - d)) / (2 * d);
      CHECK(std::abs(a1_fd - cm.a1(s)) <= 1e-5 * (1.0 + std::abs(cm.a1(s))));
      CHECK(std::abs(a2_fd - cm.a2(s)) <= 1e-5 * (1.0 + std::abs(cm.a2(s))));
      const double F_fd = (nm.bigF(s + d) - nm.bigF(s - d)) / (2 * d);
      CHECK(std::abs(F_fd - nm.f(s)) <= 1e-6 * (1.0 + std::abs(nm.f(s))));
      const double f_fd = (nm.f(s + d) - nm.f(s - d)) / (2 * d);
      CHECK(std::abs(f_fd - nm.f1(s)) <= 1e-5 * (1.0 + std::abs(nm.f1(s))));
    }
  }

  TEST_CASE("property: the growth bound holds on the sampled range") {
    gen::Gen g(12);
    for (int k = 0; k < 100; ++k) {
      const auto nm = make_nonlinearity(g.nonlinearity(), 2, g.p());
      const double s = g.uniform(0.0, 10.0);
      CHECK(std::abs(nm.f(s)) <= nm.c1 + nm.c2 * std::pow(s, nm.sigma) + 1e-12);
    }
  }
}
