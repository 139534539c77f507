#include "doctest.h"
#include "exactdiff/bessel.hpp"
#include "exactdiff/rng.hpp"
#include "test_oracles.hpp"

#include <cmath>
#include <vector>

using namespace exactdiff;

TEST_CASE("scaled modified Bessel I against closed forms and series oracle") {
  CHECK(bessel_i_scaled(0.0, 0.0) == doctest::Approx(1.0));
  // half-integer closed form: e^{-1} sqrt(2/pi) sinh(1)
  CHECK(bessel_i_scaled(0.5, 1.0) == doctest::Approx(0.34495131388824463).epsilon(1e-13));
  // frozen from the long-double series oracle
  CHECK(bessel_i_scaled(0.0, 30.0) == doctest::Approx(0.073145946482237294).epsilon(1e-10));
  for (double nu : {0.0, 0.5, 1.0, 2.5}) {
    for (double x : {0.1, 1.0, 7.0, 25.0, 29.9, 30.1, 60.0, 400.0}) {
      const double oracle = static_cast<double>(oracles::bessel_i_scaled_series(nu, x, 900));
      CHECK(bessel_i_scaled(nu, x) == doctest::Approx(oracle).epsilon(1e-11));
    }
  }
  // I_{-1} = I_1
  CHECK(bessel_i_scaled(-1.0, 2.0) == doctest::Approx(bessel_i_scaled(1.0, 2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(bessel_i_scaled(-1.5, 1.0), std::domain_error);
}

TEST_CASE("discrete Bessel pmf basics") {
  BesselDiscrete d0(0.5, 0.0);
  CHECK(d0.pmf(0) == 1.0);
  CHECK(d0.pmf(3) == 0.0);

  BesselDiscrete d(0.5, 2.0);
  double sum = 0.0;
  for (int n = 0; n < 200; ++n) sum += d.pmf(n);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  // nu = 0, x = 1: pmf(0) = 1 / I_0(1)
  BesselDiscrete d01(0.0, 1.0);
  CHECK(d01.pmf(0) == doctest::Approx(0.78984831482511197).epsilon(1e-12));
}

TEST_CASE("pmf ratio recurrence agrees with direct log-gamma evaluation") {
  const double nu = 1.25, x = 6.0;
  BesselDiscrete d(nu, x);
  const double logI = log_bessel_i_scaled(nu, x) + x;
  for (int n = 0; n <= 50; ++n) {
    const double direct =
        std::exp((2.0 * n + nu) * std::log(0.5 * x) - std::lgamma(n + 1.0) - std::lgamma(nu + n + 1.0) - logI);
    CHECK(d.pmf(n) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("discrete Bessel sampling matches the pmf") {
  RngStream rng(11);
  BesselDiscrete dx0(1.0, 0.0);
  for (int i = 0; i < 100; ++i) REQUIRE(dx0.sample(rng) == 0);

  BesselDiscrete d(1.0, 4.0);
  const int n = 1000000;
  std::vector<int> counts(40, 0);
  double mean = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto w = d.sample(rng);
    if (w < counts.size()) ++counts[w];
    mean += static_cast<double>(w);
  }
  mean /= n;
  for (int k = 0; k < 12; ++k) {
    const double p = d.pmf(k);
    const double se = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::fabs(counts[k] / static_cast<double>(n) - p) < 4.0 * se + 1e-9);
  }
  double exact_mean = 0.0;
  for (int k = 0; k < 300; ++k) exact_mean += k * d.pmf(k);
  double exact_m2 = 0.0;
  for (int k = 0; k < 300; ++k) exact_m2 += k * k * d.pmf(k);
  const double se_mean = std::sqrt((exact_m2 - exact_mean * exact_mean) / n);
  CHECK(std::fabs(mean - exact_mean) < 4.0 * se_mean);
}

TEST_CASE("bessel transition density normalizes and matches known branches") {
  const auto d3 = BesselOrder::from_dimension(3.0);
  const double mass = oracles::integrate(
      [&](double z) { return z > 0 ? bessel_transition_density(d3, 0.5, 1.2, z) : 0.0; }, 1e-12, 12.0);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));

  // y = 0, delta = 2: Rayleigh
  const auto d2 = BesselOrder::from_dimension(2.0);
  for (double z : {0.2, 0.9, 2.1}) {
    const double t = 0.7;
    CHECK(bessel_transition_density(d2, t, 0.0, z) ==
          doctest::Approx(z / t * std::exp(-0.5 * z * z / t)).epsilon(1e-12));
  }

  // delta = 3, y > 0: radial part of a 3-d Gaussian, via angular quadrature
  const double t = 1.0, y = 1.0, z = 2.0;
  const double radial = oracles::integrate(
      [&](double c) {
        return z * z / std::pow(2.0 * 3.141592653589793 * t, 1.5) * 2.0 * 3.141592653589793 *
               std::exp(-(z * z + y * y - 2.0 * z * y * c) / (2.0 * t));
      },
      -1.0, 1.0);
  CHECK(bessel_transition_density(d3, t, y, z) == doctest::Approx(radial).epsilon(1e-8));
}

TEST_CASE("Chapman-Kolmogorov at desk scale") {
  const auto d3 = BesselOrder::from_dimension(3.0);
  const double s = 0.3, t = 0.7, y = 1.0, z = 2.0;
  const double conv = oracles::integrate(
      [&](double u) {
        return u > 0 ? bessel_transition_density(d3, s, y, u) * bessel_transition_density(d3, t, u, z) : 0.0;
      },
      1e-12, 15.0);
  CHECK(conv == doctest::Approx(bessel_transition_density(d3, s + t, y, z)).epsilon(1e-6));
}

TEST_CASE("squared Bessel bridge point: degenerate case is exponential") {
  const auto d2 = BesselOrder::from_dimension(2.0);
  RngStream rng(21);
  const double T = 1.0, t = 0.25;
  const double rate = T / (2.0 * t * (T - t));
  const int n = 200000;
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = squared_bessel_bridge_point(d2, 0.0, 0.0, T, t, rng);
  const double ks = oracles::ks_statistic(xs, [&](double x) { return 1.0 - std::exp(-rate * x); });
  CHECK(ks < 1.36 / std::sqrt(static_cast<double>(n)) * 2.0);
}

TEST_CASE("squared Bessel bridge point: mixture-moment identity") {
  const auto d4 = BesselOrder::from_dimension(4.0);
  RngStream rng(22);
  const double y = 1.0, z = 1.0, T = 1.0, t = 0.5;
  const int n = 1000000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = squared_bessel_bridge_point(d4, y, z, T, t, rng);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  BesselDiscrete w(d4.nu, std::sqrt(y * z) / T);
  double ew = 0.0;
  for (int k = 0; k < 200; ++k) ew += k * w.pmf(k);
  const double ev = 0.5 * (y * (T - t) / (t * T) + z * t / (T * (T - t)));
  const double rate = T / (2.0 * t * (T - t));
  const double exact_mean = (ev + 2.0 * ew + d4.nu + 1.0) / rate;
  const double sd = std::sqrt(s2 / n - mean * mean);
  CHECK(std::fabs(mean - exact_mean) < 4.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("bessel bridge point: continuity, reversal symmetry, and the delta=1 law") {
  const auto d3 = BesselOrder::from_dimension(3.0);
  RngStream rng(23);
  // t -> 0 concentrates at the left endpoint
  {
    double s = 0, s2 = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
      const double x = bessel_bridge_point(d3, 1.0, 2.0, 1.0, 1e-6, rng);
      s += x;
      s2 += x * x;
    }
    CHECK(std::fabs(s / n - 1.0) < 0.01);
    CHECK(std::sqrt(std::fabs(s2 / n - (s / n) * (s / n))) < 0.01);
  }
  // time reversal with equal endpoints
  {
    const int n = 200000;
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) a[i] = bessel_bridge_point(d3, 1.0, 1.0, 1.0, 0.3, rng);
    for (int i = 0; i < n; ++i) b[i] = bessel_bridge_point(d3, 1.0, 1.0, 1.0, 0.7, rng);
    CHECK(oracles::ks_two_sample(a, b) < 0.004);
  }
  // delta = 1 equals the reflected-Brownian-bridge marginal
  {
    const auto d1 = BesselOrder::from_dimension(1.0);
    const double y = 0.6, z = 0.9, T = 1.0, t = 0.4;
    const int n = 200000;
    std::vector<double> ours(n), oracle(n);
    for (int i = 0; i < n; ++i) ours[i] = bessel_bridge_point(d1, y, z, T, t, rng);
    // mixture of bridges to +z and -z, then reflect
    const double wplus = std::exp(-0.5 * (z - y) * (z - y) / T);
    const double wminus = std::exp(-0.5 * (z + y) * (z + y) / T);
    const double pplus = wplus / (wplus + wminus);
    const double sig = std::sqrt(t * (T - t) / T);
    for (int i = 0; i < n; ++i) {
      const double zz = sample_bernoulli(pplus, rng) ? z : -z;
      const double mu = y + (zz - y) * t / T;
      oracle[i] = std::fabs(mu + sig * sample_normal(rng));
    }
    CHECK(oracles::ks_two_sample(ours, oracle) < 0.004);
  }
}
