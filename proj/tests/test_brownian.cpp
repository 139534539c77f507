#include "doctest.h"
#include "exactdiff/brownian.hpp"
#include "exactdiff/quadrature.hpp"
#include "test_oracles.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace exactdiff;

TEST_CASE("bridge point moments") {
  RngStream rng(31);
  const int n = 1000000;
  {
    BridgeSpec spec(0.0, 0.0, 1.0);
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = bridge_point(spec, 0.5, rng);
      s += x;
      s2 += x * x;
    }
    CHECK(std::fabs(s / n) < 4.0 * std::sqrt(0.25 / n));
    CHECK(std::fabs(s2 / n - 0.25) < 6.0 * 0.25 * std::sqrt(2.0 / n));
  }
  {
    BridgeSpec spec(1.0, 3.0, 2.0);
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = bridge_point(spec, 0.5, rng);
      s += x;
      s2 += x * x;
    }
    CHECK(s / n == doctest::Approx(1.5).epsilon(0.002));
    CHECK(s2 / n - (s / n) * (s / n) == doctest::Approx(0.375).epsilon(0.01));
  }
  {
    BridgeSpec spec(0.0, 2.0, 1.0);
    double s = 0, s2 = 0;
    const int m = 4000;
    for (int i = 0; i < m; ++i) {
      const double x = bridge_point(spec, 1.0 - 1e-6, rng);
      s += x;
      s2 += x * x;
    }
    CHECK(std::fabs(s / m - 2.0) < 0.01);
    CHECK(std::sqrt(std::fabs(s2 / m - (s / m) * (s / m))) < 0.01);
  }
  CHECK_THROWS_AS(bridge_point(BridgeSpec(0, 0, 1), 1.5, rng), std::domain_error);
}

TEST_CASE("bridge minimum cdf closed form") {
  BridgeSpec spec(0.0, 0.0, 1.0);
  CHECK(bridge_min_cdf(spec, 0.0) == doctest::Approx(1.0));
  CHECK(bridge_min_cdf(spec, -1.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(bridge_min_cdf(spec, -50.0) < 1e-300);
  CHECK_THROWS_AS(bridge_min_cdf(spec, 0.5), std::domain_error);
}

TEST_CASE("sampled minimum matches the closed-form cdf on a grid") {
  // desk-size version; the acceptance suite runs the 10^6-draw spec-level check
  RngStream rng(32);
  BridgeSpec spec(0.0, 0.0, 1.0);
  const int n = 200000;
  std::vector<double> ms(n);
  for (int i = 0; i < n; ++i) ms[i] = sample_min(spec, rng).m;
  std::sort(ms.begin(), ms.end());
  for (int g = 1; g <= 20; ++g) {
    const double a = -2.0 * g / 20.0;
    const double expected = bridge_min_cdf(spec, a);
    const double observed =
        (std::upper_bound(ms.begin(), ms.end(), a) - ms.begin()) / static_cast<double>(n);
    CHECK(std::fabs(observed - expected) < 0.004);
  }
}

TEST_CASE("probability integral transform of the sampled minimum is uniform") {
  RngStream rng(33);
  BridgeSpec spec(0.3, 0.8, 0.7);
  const int n = 200000;
  std::vector<double> us(n);
  for (int i = 0; i < n; ++i) us[i] = bridge_min_cdf(spec, sample_min(spec, rng).m);
  const double ks = oracles::ks_statistic(us, [](double u) { return u; });
  CHECK(ks < 0.004);
}

TEST_CASE("time-of-minimum sampler matches its density by quadrature") {
  for (auto [th1, th2, T] : std::vector<std::array<double, 3>>{{0.5, 0.8, 1.0}, {0.05, 1.2, 0.5}}) {
    auto dens = [t1 = th1, t2 = th2, TT = T](double t) { return detail::time_of_min_density(t, t1, t2, TT); };
    const double mass = oracles::integrate(dens, 1e-12, T - 1e-12);
    REQUIRE(mass > 0.0);
    // normalized CDF at a handful of grid points
    const int G = 24;
    std::vector<double> grid(G), cdf(G);
    double acc = 0.0, prev = 1e-12;
    for (int g = 0; g < G; ++g) {
      grid[g] = T * (g + 1.0) / (G + 1.0);
      acc += oracles::integrate(dens, prev, grid[g]);
      cdf[g] = acc / mass;
      prev = grid[g];
    }
    RngStream rng(34);
    const int n = 100000;
    std::vector<double> taus(n);
    for (int i = 0; i < n; ++i) taus[i] = detail::sample_time_of_min(th1, th2, T, rng);
    std::sort(taus.begin(), taus.end());
    for (int g = 0; g < G; ++g) {
      const double emp =
          (std::upper_bound(taus.begin(), taus.end(), grid[g]) - taus.begin()) / static_cast<double>(n);
      CHECK(std::fabs(emp - cdf[g]) < 0.006);
    }
  }
  // symmetric case: tau and T - tau equal in law
  RngStream rng(35);
  BridgeSpec spec(0.5, 0.5, 1.0);
  const int n = 200000;
  std::vector<double> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    const MinRecord r = sample_min(spec, rng);
    a[i] = r.tau;
    b[i] = 1.0 - sample_min(spec, rng).tau;
  }
  CHECK(oracles::ks_two_sample(a, b) < 0.005);
}

TEST_CASE("constrained minimum stays inside the truncation band") {
  RngStream rng(36);
  BridgeSpec spec(0.25, 0.25, 0.15);
  for (int i = 0; i < 20000; ++i) {
    const MinRecord r = sample_min(spec, rng, 0.0);
    REQUIRE(r.m > 0.0);
    REQUIRE(r.m <= 0.25);
    REQUIRE(r.tau > 0.0);
    REQUIRE(r.tau < 0.15);
  }
  CHECK_THROWS_AS(sample_min(spec, rng, 0.3), std::domain_error);
}

TEST_CASE("sample_max reflects sample_min exactly") {
  BridgeSpec spec(0.4, -0.2, 0.8);
  RngStream a(37), b(37);
  for (int i = 0; i < 2000; ++i) {
    const MaxRecord mx = sample_max(spec, a);
    const MinRecord mn = sample_min(BridgeSpec(-0.4, 0.2, 0.8), b);
    REQUIRE(mx.m == -mn.m);
    REQUIRE(mx.tau == mn.tau);
    REQUIRE(mx.m >= std::max(spec.y, spec.z));
  }
}

TEST_CASE("bridge given min stays above the minimum and collapses at tau") {
  RngStream rng(38);
  BridgeSpec spec(0.0, 0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const MinRecord r = sample_min(spec, rng);
    const double t = rng.uniform();
    const double v = bridge_given_min(spec, r, t, rng);
    REQUIRE(v >= r.m);
  }
  const MinRecord r{-0.8, 0.4};
  CHECK(bridge_given_min(spec, r, 0.4, rng) == -0.8);
  CHECK(bridge_given_min(spec, r, 0.0, rng) == 0.0);
}

TEST_CASE("min plus bridge-given-min reproduces the unconditional bridge marginal") {
  RngStream rng(39);
  BridgeSpec spec(0.0, 0.0, 1.0);
  const int n = 200000;
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) {
    const MinRecord r = sample_min(spec, rng);
    xs[i] = bridge_given_min(spec, r, 0.5, rng);
  }
  const double sig = std::sqrt(0.25);
  const double ks =
      oracles::ks_statistic(xs, [&](double x) { return 0.5 * (1.0 + std::erf(x / (sig * std::sqrt(2.0)))); });
  CHECK(ks < 0.004);
}

TEST_CASE("bridge given min marginal against the filtered brute-force oracle") {
  // Brute-force bridges filtered on the minimum landing in a band; our
  // sampler is driven by each accepted path's own (m, tau) record, which
  // integrates the conditional law over the same empirical record sample.
  // Desk-size run; the acceptance suite runs the 2^14-grid full-power check.
  std::mt19937_64 gen(40);
  RngStream rng(41);
  BridgeSpec spec(0.0, 0.0, 1.0);
  const int grid = 1 << 13;
  const int n_paths = 60000;
  const int probe_idx = grid / 3;
  const double t_probe = probe_idx / static_cast<double>(grid);
  std::vector<double> brute, ours;
  for (int p = 0; p < n_paths; ++p) {
    const auto path = oracles::brownian_bridge_grid(0.0, 0.0, 1.0, grid, gen);
    int arg = 0;
    for (int i = 1; i <= grid; ++i) {
      if (path[i] < path[arg]) arg = i;
    }
    const double m = path[arg];
    if (m > -0.95 && m < -0.45) {
      brute.push_back(path[probe_idx]);
      const MinRecord rec{m, arg / static_cast<double>(grid)};
      ours.push_back(bridge_given_min(spec, rec, t_probe, rng));
    }
  }
  REQUIRE(brute.size() > 10000);
  CHECK(oracles::ks_two_sample(brute, ours) < 0.02);
}
