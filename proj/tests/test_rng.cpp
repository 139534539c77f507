#include "doctest.h"
#include "exactdiff/rng.hpp"

#include <cmath>
#include <vector>

using namespace exactdiff;

TEST_CASE("identical seeds reproduce identical streams") {
  RngStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.uniform() == b.uniform());
  RngStream c(42, 3), d(42, 3);
  for (int i = 0; i < 100; ++i) REQUIRE(sample_gamma(2.5, 1.0, c) == sample_gamma(2.5, 1.0, d));
}

TEST_CASE("derived streams differ") {
  RngStream a(42, 0), b(42, 1);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += a.uniform() == b.uniform();
  CHECK(same == 0);
}

TEST_CASE("normal sampler moments and counters") {
  RngStream rng(1);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_normal(rng);
    s += x;
    s2 += x * x;
  }
  CHECK(std::fabs(s / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::fabs(s2 / n - 1.0) < 6.0 / std::sqrt(static_cast<double>(n)));
  CHECK(rng.counters().logical_draws == static_cast<std::uint64_t>(n));
  CHECK(rng.counters().raw_uniforms == static_cast<std::uint64_t>(2 * n));
}

TEST_CASE("gamma sampler matches mean and variance") {
  RngStream rng(2);
  const int n = 200000;
  for (double shape : {0.5, 1.0, 3.7}) {
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = sample_gamma(shape, 2.0, rng);
      s += x;
      s2 += x * x;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::fabs(mean - shape / 2.0) < 5.0 * std::sqrt(shape / 4.0 / n));
    CHECK(std::fabs(var - shape / 4.0) < 0.05 * (shape / 4.0) + 0.001);
  }
}

TEST_CASE("poisson sampler matches pmf across the method switch") {
  RngStream rng(3);
  const int n = 400000;
  for (double mu : {0.3, 4.0, 25.0, 300.0}) {
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(sample_poisson(mu, rng));
      s += x;
      s2 += x * x;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::fabs(mean - mu) < 5.0 * std::sqrt(mu / n));
    CHECK(std::fabs(var - mu) < 0.05 * mu + 0.01);
  }
  CHECK(sample_poisson(0.0, rng) == 0);
}

TEST_CASE("exponential inversion") {
  RngStream rng(4);
  const int n = 100000;
  int below = 0;
  for (int i = 0; i < n; ++i) below += sample_exponential(rng) < 1.0;
  CHECK(std::fabs(below / static_cast<double>(n) - (1.0 - std::exp(-1.0))) < 0.006);
}
