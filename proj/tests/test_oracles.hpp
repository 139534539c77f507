#pragma once

// Test-only oracles, independent of the library's computational paths:
// high-precision series, trapezoid/Richardson quadrature, Euler-Maruyama
// path simulation, brute-force bridge statistics, and KS helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracles {

// long-double power series for e^{-x} I_nu(x); term count grows with x, fine
// for the desk-scale arguments used in tests.
inline long double bessel_i_scaled_series(long double nu, long double x, int terms = 400) {
  if (x == 0.0L) return nu == 0.0L ? 1.0L : 0.0L;
  const long double lh = logl(0.5L * x);
  long double max_log = -1e30L;
  std::vector<long double> logs(terms);
  for (int n = 0; n < terms; ++n) {
    logs[n] = (2.0L * n + nu) * lh - lgammal(n + 1.0L) - lgammal(nu + n + 1.0L);
    max_log = std::max(max_log, logs[n]);
  }
  long double sum = 0.0L;
  for (int n = 0; n < terms; ++n) sum += expl(logs[n] - max_log);
  return expl(max_log + logl(sum) - x);
}

// Composite-Simpson with Richardson check, deliberately simpler than the
// library's adaptive scheme.
inline double simpson_fixed(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double integrate(const std::function<double(double)>& f, double a, double b) {
  double prev = simpson_fixed(f, a, b, 64);
  for (int n = 128; n <= 1 << 22; n *= 2) {
    const double cur = simpson_fixed(f, a, b, n);
    if (std::fabs(cur - prev) <= 1e-11 * (std::fabs(cur) + 1e-12)) return cur;
    prev = cur;
  }
  return prev;
}

// One-sample KS distance against a cdf callable. Sorts a copy.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double c = cdf(xs[i]);
    d = std::max(d, std::max(std::fabs((i + 1.0) / n - c), std::fabs(c - i / n)));
  }
  return d;
}

// Two-sample KS distance. Sorts copies.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    d = std::max(d, std::fabs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

// Euler-Maruyama endpoint (and optionally mid-path) simulation, independent
// of the library RNG stack.
struct EulerPaths {
  std::vector<double> at_mid;
  std::vector<double> at_end;
};

inline EulerPaths euler_paths(const std::function<double(double)>& drift, double y0, double T, double dt,
                              std::size_t n_paths, std::uint64_t seed, double clamp_lo = -1e300) {
  EulerPaths out;
  out.at_mid.resize(n_paths);
  out.at_end.resize(n_paths);
  const std::size_t steps = static_cast<std::size_t>(std::llround(T / dt));
  const std::size_t half = steps / 2;
  std::mt19937_64 gen(seed);
  const double sdt = std::sqrt(dt);
  for (std::size_t p = 0; p < n_paths; ++p) {
    double x = y0;
    for (std::size_t s = 0; s < steps; ++s) {
      const double u1 = (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
      const double u2 = (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
      x += drift(x) * dt + sdt * z;
      if (x < clamp_lo) x = clamp_lo;
      if (s + 1 == half) out.at_mid[p] = x;
    }
    out.at_end[p] = x;
  }
  return out;
}

// Regularized upper incomplete gamma Q(a, x), for chi-square p-values.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) return 1.0;
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) {
    // series for P(a,x), return 1 - P
    double sum = 1.0 / a, term = sum;
    for (int n = 1; n < 500; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::fabs(term) < 1e-15 * std::fabs(sum)) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // Lentz continued fraction for Q
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double chi_square_pvalue(double stat, int dof) { return gamma_q(0.5 * dof, 0.5 * stat); }

// Brute-force Brownian bridge on an n-step grid; returns the grid values.
inline std::vector<double> brownian_bridge_grid(double y, double z, double T, int n, std::mt19937_64& gen) {
  std::vector<double> w(n + 1);
  w[0] = 0.0;
  const double sdt = std::sqrt(T / n);
  for (int i = 1; i <= n; ++i) {
    const double u1 = (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
    w[i] = w[i - 1] + sdt * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  std::vector<double> out(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    out[i] = y + (z - y) * t + (w[i] - t * w[n]);
  }
  return out;
}

}  // namespace oracles
