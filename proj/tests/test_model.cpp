#include "doctest.h"
#include "exactdiff/model.hpp"
#include "exactdiff/bessel.hpp"
#include "test_oracles.hpp"

#include <cmath>

using namespace exactdiff;

TEST_CASE("lamperti transform: identity, log, and growth closed form") {
  CHECK(lamperti_transform([](double) { return 1.0; }, 0.0, 2.5) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(lamperti_transform([](double u) { return u; }, 1.0, std::exp(1.0)) ==
        doctest::Approx(1.0).epsilon(1e-10));
  // growth model sigma^2 = tau x + omega x^2, closed form vs quadrature
  // oracle (substituted u = v^2 to remove the endpoint singularity)
  const GrowthModelParams p(1.0, 3.0, 1.0);
  const double via_quad = oracles::integrate(
      [&](double v) { return 2.0 / std::sqrt(p.tau + p.omega * v * v); }, 0.0, 1.0);
  CHECK(growth_lamperti(p, 1.0) == doctest::Approx(1.5206919926018927).epsilon(1e-8));
  CHECK(growth_lamperti(p, 1.0) == doctest::Approx(via_quad).epsilon(1e-8));
  // boundary value ln(tau)/sqrt(omega)
  const GrowthModelParams p2(1.0, 3.0, 2.0);
  CHECK(growth_lamperti(p2, 0.0) == doctest::Approx(std::log(2.0) / std::sqrt(3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(lamperti_transform([](double u) { return u - 0.5; }, 0.0, 1.0), std::domain_error);
}

TEST_CASE("phi is nonnegative and vanishes when the target is the candidate") {
  const auto spec = make_wide_sense_bessel_spec(1.0, 0.0);
  for (double u : {0.01, 0.5, 1.0, 10.0, 200.0}) CHECK(spec.phi(u) == 0.0);
  // sine drift: phi in [0, sup - floor]
  const auto sine = make_sine_drift_spec();
  for (int i = 1; i < 100; ++i) {
    const double u = -10.0 + 20.0 * i / 100.0;
    const double v = sine.phi(u);
    CHECK(v >= 0.0);
    CHECK(v <= sine.rate_bound + 1e-12);
  }
  // frozen analytic extrema of (sin^2 u + cos u)/2: min -1/2, max 5/8
  CHECK(sine.phi_floor == doctest::Approx(-0.5).epsilon(1e-8));
  CHECK(sine.rate_bound == doctest::Approx(9.0 / 8.0).epsilon(1e-8));
}

TEST_CASE("growth phi-tilde stays finite at the boundary") {
  const GrowthModelParams p(1.0, 3.0, 1.0);
  const auto spec = make_growth_bessel_spec(p);
  double prev = 0.0;
  for (double z : {1e-2, 1e-4, 1e-6}) {
    const double v = spec.phi(z);
    CHECK(std::isfinite(v));
    if (prev != 0.0) CHECK(std::fabs(v - prev) < 0.05);
    prev = v;
  }
  CHECK_THROWS_AS(spec.phi(0.0), std::domain_error);
}

TEST_CASE("conditioned drift: Brownian base gives the Bessel(3) drift") {
  auto zero = [](double) { return 0.0; };
  for (double u : {0.3, 1.0, 7.0}) {
    CHECK(conditioned_drift(zero, zero, u) == doctest::Approx(1.0 / u).epsilon(1e-9));
  }
}

TEST_CASE("conditioned drift identity from the delta = 3 choice") {
  // [(a*)^2 - b^2 + (a*)' - b'](u) == a^2(u) + a'(u) + (d-3)(d-1)/(4u^2),
  // checked by finite differences for alpha(u) = sin(u), delta = 3.
  auto alpha = [](double u) { return std::sin(u); };
  auto m2A = [](double u) { return -2.0 * (1.0 - std::cos(u)); };  // -2 A, A = 1 - cos
  const double delta = 3.0;
  for (double u : {0.1, 1.0, 10.0}) {
    auto astar = [&](double x) { return conditioned_drift(alpha, m2A, x); };
    const double h = 1e-5;
    const double as = astar(u);
    const double asp = (astar(u + h) - astar(u - h)) / (2.0 * h);
    const double beta = (delta - 1.0) / (2.0 * u);
    const double betap = -(delta - 1.0) / (2.0 * u * u);
    const double lhs = as * as - beta * beta + asp - betap;
    const double rhs = std::sin(u) * std::sin(u) + std::cos(u) + (delta - 3.0) * (delta - 1.0) / (4.0 * u * u);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
  }
}

TEST_CASE("conditioned drift rejects a divergent scale integral") {
  // alpha = 1/u: exp(-2A) = u^{-2}, whose integral diverges at 0.
  auto alpha = [](double u) { return 1.0 / u; };
  auto m2A = [](double u) { return -2.0 * std::log(u); };
  CHECK_THROWS_AS(conditioned_drift(alpha, m2A, 1.0), std::domain_error);
}

TEST_CASE("growth drift: boundary asymptotics and frozen high-precision values") {
  const GrowthModelParams p(1.0, 3.0, 1.0);
  CHECK(std::fabs(growth_drift(p, 1e-6) - 1.5e6) < 1e-3);
  // frozen from a 40-digit transcription of the drift formula
  CHECK(growth_drift(p, 0.5) == doctest::Approx(2.9990860757881367).epsilon(1e-12));
  const GrowthModelParams p10(10.0, 3.0, 1.0);
  CHECK(growth_drift(p10, 0.5) == doctest::Approx(3.3358269935019136).epsilon(1e-12));
  // alpha(z) - 3/(2z) is linear near the boundary: the ratio stabilizes
  const double r1 = (growth_drift(p, 1e-3) - 1.5e3) / 1e-3;
  const double r2 = (growth_drift(p, 1e-4) - 1.5e4) / 1e-4;
  CHECK(r1 == doctest::Approx(r2).epsilon(1e-4));
  CHECK_THROWS_AS(growth_drift(p, 0.0), std::domain_error);
  CHECK_THROWS_AS(growth_drift(p, -1.0), std::domain_error);
}

TEST_CASE("growth drift derivative matches finite differences") {
  const GrowthModelParams p(10.0, 3.0, 1.0);
  for (double z : {0.05, 0.4, 2.0, 9.0}) {
    const double h = 1e-6 * std::max(1.0, z);
    const double fd = (growth_drift(p, z + h) - growth_drift(p, z - h)) / (2.0 * h);
    CHECK(growth_drift_derivative(p, z) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("growth log-bias differentiates back to the drift") {
  for (double kappa : {1.0, 10.0}) {
    const GrowthModelParams p(kappa, 3.0, 1.0);
    for (double z : {0.1, 0.8, 3.0, 20.0}) {
      const double h = 1e-6 * std::max(1.0, z);
      const double fd = (growth_log_bias_brownian(p, z + h) - growth_log_bias_brownian(p, z - h)) / (2.0 * h);
      CHECK(fd == doctest::Approx(growth_drift(p, z)).epsilon(1e-6));
    }
  }
}

TEST_CASE("growth phi bounds: paper pair and dense-grid containment") {
  const GrowthModelParams p1(1.0, 3.0, 1.0);
  auto [l1, u1] = growth_phi_bounds(p1);
  CHECK(l1 == doctest::Approx(-1.0));
  CHECK(u1 == doctest::Approx(25.0 / 12.0).epsilon(1e-14));
  const GrowthModelParams p10(10.0, 3.0, 1.0);
  auto [l10, u10] = growth_phi_bounds(p10);
  CHECK(l10 == doctest::Approx(-10.0));
  CHECK(u10 == doctest::Approx(289.0 / 12.0 + 20.0).epsilon(1e-14));

  for (const auto& p : {p1, p10}) {
    const auto spec = make_growth_bessel_spec(p);
    auto [lo, hi] = growth_phi_bounds(p);
    for (int i = 0; i < 10000; ++i) {
      const double z = 1e-6 + (50.0 - 1e-6) * i / 9999.0;
      const double expr = spec.bracket(z);
      REQUIRE(expr >= lo - 1e-9);
      REQUIRE(expr <= hi + 1e-9);
    }
  }
}

TEST_CASE("two routes to the growth bracket agree") {
  // closed-form bracket vs alpha^2 - beta^2 + alpha' - beta' from the drift
  const GrowthModelParams p(1.0, 3.0, 1.0);
  const auto spec = make_growth_bessel_spec(p);
  for (double z : {0.05, 0.3, 1.0, 4.0, 20.0}) {
    const double a = growth_drift(p, z);
    const double ap = growth_drift_derivative(p, z);
    const double beta = 3.0 / (2.0 * z);
    const double generic = a * a - beta * beta + ap + 3.0 / (2.0 * z * z);
    CHECK(spec.bracket(z) == doctest::Approx(generic).epsilon(1e-8));
  }
}

TEST_CASE("wide-sense Bessel drift closed forms") {
  // rho = 0 reduces to the Bessel drift
  CHECK(wide_sense_bessel_drift(1.0, 0.0, 2.0) == doctest::Approx(0.75));
  // half-integer ratio: I_{3/2}/I_{1/2}(x) = coth(x) - 1/x
  CHECK(wide_sense_bessel_drift(0.5, 1.0, 1.0) == doctest::Approx(1.3130352854993313).epsilon(1e-12));
  // frozen from the series oracle: 1/2 + 2 I_1(2)/I_0(2)
  CHECK(wide_sense_bessel_drift(0.0, 2.0, 1.0) == doctest::Approx(1.8955493159280160).epsilon(1e-10));
  CHECK_THROWS_AS(wide_sense_bessel_drift(1.0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("growth model parameter validation") {
  CHECK_THROWS_AS(GrowthModelParams(0.0, 3.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(GrowthModelParams(1.5, 3.0, 1.0), std::invalid_argument);  // omega == 2 kappa
  CHECK_THROWS_AS(GrowthModelParams(1.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(GrowthModelParams(1.0, 3.0, -1.0), std::invalid_argument);
}

TEST_CASE("brownian-case growth band supremum is an upper bound and matches phi at its argument") {
  const GrowthModelParams p(1.0, 3.0, 1.0);
  const auto spec = make_growth_brownian_spec(p);
  REQUIRE(spec.band_sup);
  for (double m : {0.01, 0.1, 0.5, 2.0, 10.0}) {
    const double sup = spec.band_sup(m);
    CHECK(sup >= spec.phi(m) - 1e-12);
    // monotone case: the sup is attained at m
    CHECK(sup == doctest::Approx(spec.phi(m)).epsilon(1e-12));
    for (double u = m; u < m + 5.0; u += 0.37) CHECK(spec.phi(u) <= sup + 1e-9);
  }
  // non-monotone case (kappa > omega/2): still an upper bound on a scan
  const GrowthModelParams p10(10.0, 3.0, 1.0);
  const auto spec10 = make_growth_brownian_spec(p10);
  for (double m : {0.01, 0.2, 0.45, 1.0, 6.0}) {
    const double sup = spec10.band_sup(m);
    for (double u = m; u < m + 30.0; u += 0.0831) CHECK(spec10.phi(u) <= sup + 1e-6);
  }
}
