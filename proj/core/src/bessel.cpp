#include "exactdiff/bessel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "exactdiff/quadrature.hpp"

namespace exactdiff {

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;

// Power series; all terms positive, so the forward ratio recurrence has no
// cancellation. In the x <= 60 regime the largest term is at most ~e^60 and
// fits a double, so only one lgamma is needed; beyond that (reachable only
// for large nu, where the asymptotic regime has not kicked in yet) fall back
// to summing in log space.
double log_i_scaled_series(double nu, double x) {
  if (x == 0.0) {
    // I_nu(0) = 1 for nu = 0, 0 for nu > 0; treat nu in (-1,0) via limit +inf.
    if (nu == 0.0) return 0.0;
    if (nu > 0.0) return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::infinity();
  }
  const double q = 0.25 * x * x;
  if (x <= 60.0) {
    const double log_t0 = nu * std::log(0.5 * x) - std::lgamma(nu + 1.0);
    if (log_t0 < 650.0) {
      double term = 1.0;  // relative to term 0
      double sum = 1.0;
      for (int n = 0; n < 100000; ++n) {
        term *= q / ((n + 1.0) * (nu + n + 1.0));
        sum += term;
        if (term < 1e-18 * sum) break;
      }
      return log_t0 + std::log(sum) - x;
    }
  }
  const double lh = std::log(0.5 * x);
  const double disc = 0.25 * (nu + 1.0) * (nu + 1.0) + q;
  const std::int64_t n_peak =
      static_cast<std::int64_t>(std::max(0.0, std::floor(-0.5 * (nu + 1.0) + std::sqrt(disc))));
  auto log_term = [&](std::int64_t n) {
    return (2.0 * n + nu) * lh - std::lgamma(n + 1.0) - std::lgamma(nu + n + 1.0);
  };
  const double lmax = log_term(n_peak);
  double sum = 0.0;
  for (std::int64_t n = n_peak; n >= 0; --n) {
    const double t = std::exp(log_term(n) - lmax);
    sum += t;
    if (t < 1e-18 * sum) break;
  }
  for (std::int64_t n = n_peak + 1;; ++n) {
    const double t = std::exp(log_term(n) - lmax);
    sum += t;
    if (t < 1e-18 * sum) break;
    if (n > n_peak + 100000) throw NumericError("bessel_i_scaled: series did not converge");
  }
  return lmax + std::log(sum) - x;
}

// Hankel expansion of e^{-x} I_nu(x) for large x: (2 pi x)^{-1/2} * sum_k (-1)^k a_k(nu)/x^k.
double log_i_scaled_asymptotic(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  double prev = std::fabs(term);
  for (int k = 1; k <= 40; ++k) {
    term *= -(mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * x * k);
    if (std::fabs(term) >= prev) break;  // asymptotic series: stop at smallest term
    sum += term;
    prev = std::fabs(term);
    if (std::fabs(term) < 1e-17 * std::fabs(sum)) break;
  }
  return -0.5 * std::log(2.0 * kPi * x) + std::log(sum);
}

}  // namespace

double log_bessel_i_scaled(double nu, double x) {
  if (nu < -1.0) throw std::domain_error("bessel_i_scaled: nu must be >= -1");
  if (x < 0.0) throw std::domain_error("bessel_i_scaled: x must be >= 0");
  if (nu == -1.0) nu = 1.0;  // I_{-1} = I_1
  const double threshold = std::max(30.0, nu * nu);
  if (x <= threshold) return log_i_scaled_series(nu, x);
  return log_i_scaled_asymptotic(nu, x);
}

double bessel_i_scaled(double nu, double x) { return std::exp(log_bessel_i_scaled(nu, x)); }

BesselDiscrete::BesselDiscrete(double nu_, double x_) : nu(nu_), x(x_) {
  if (nu < -1.0) throw std::domain_error("BesselDiscrete: nu must be >= -1");
  if (x < 0.0) throw std::domain_error("BesselDiscrete: x must be >= 0");
  if (x == 0.0) {
    log_p0_ = 0.0;  // W = 0 a.s.
    return;
  }
  // log pmf(0) = nu*log(x/2) - lgamma(nu+1) - log I_nu(x)
  //            = nu*log(x/2) - lgamma(nu+1) - (log i_scaled + x).
  log_p0_ = nu * std::log(0.5 * x) - std::lgamma(nu + 1.0) - (log_bessel_i_scaled(nu, x) + x);
}

double BesselDiscrete::pmf(std::uint64_t n) const {
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  const double q = 0.25 * x * x;
  double p = std::exp(log_p0_);
  for (std::uint64_t k = 0; k < n; ++k) {
    p *= q / ((static_cast<double>(k) + 1.0) * (nu + static_cast<double>(k) + 1.0));
  }
  return p;
}

std::uint64_t BesselDiscrete::sample(RngStream& rng) const {
  if (x == 0.0) return 0;
  const double u = rng.uniform();
  rng.add_logical();
  const double q = 0.25 * x * x;
  // Small arguments: plain sequential inversion from n = 0.
  if (x <= 300.0) {
    double p = std::exp(log_p0_);
    double cdf = p;
    std::uint64_t n = 0;
    while (u > cdf) {
      if (cdf > 1.0 - 1e-15) break;  // tail exhausted to machine resolution
      ++n;
      p *= q / (static_cast<double>(n) * (nu + static_cast<double>(n)));
      cdf += p;
      if (n > 100000000ULL) throw NumericError("BesselDiscrete::sample: inversion scan overran");
    }
    return n;
  }
  // Large arguments: pmf(0) underflows, so normalize relative to the mode and
  // scan the natural order across the significant window (the mass below it
  // is far under machine resolution).
  const double npk = std::max(0.0, 0.5 * (std::sqrt((nu + 1.0) * (nu + 1.0) + x * x) - (nu + 2.0)));
  const std::uint64_t mode = static_cast<std::uint64_t>(npk);
  const double width = std::sqrt(0.25 * x) + 2.0;
  const std::uint64_t n_lo = mode > static_cast<std::uint64_t>(16.0 * width)
                                 ? mode - static_cast<std::uint64_t>(16.0 * width)
                                 : 0;
  auto ratio_up = [&](std::uint64_t n) {  // pmf(n+1)/pmf(n)
    return q / ((static_cast<double>(n) + 1.0) * (nu + static_cast<double>(n) + 1.0));
  };
  double total = 0.0;
  {
    double p = 1.0;
    std::uint64_t n = n_lo;
    for (;;) {
      total += p;
      const double r = ratio_up(n);
      if (n > mode && p * r / (1.0 - std::min(r, 0.5)) < 1e-18 * total) break;
      p *= r;
      ++n;
      if (n > n_lo + 100000000ULL) throw NumericError("BesselDiscrete::sample: window scan overran");
    }
  }
  const double target = u * total;
  double p = 1.0;
  double cdf = 1.0;
  std::uint64_t n = n_lo;
  while (target > cdf) {
    if (cdf > (1.0 - 1e-15) * total) break;
    p *= ratio_up(n);
    ++n;
    cdf += p;
  }
  return n;
}

double bessel_transition_density(const BesselOrder& order, double t, double y, double z) {
  if (!(t > 0.0)) throw std::domain_error("bessel_transition_density: t must be > 0");
  if (!(z > 0.0)) throw std::domain_error("bessel_transition_density: z must be > 0");
  if (y < 0.0) throw std::domain_error("bessel_transition_density: y must be >= 0");
  const double nu = order.nu;
  if (y == 0.0) {
    if (!(order.delta > 0.0)) throw std::domain_error("bessel_transition_density: delta must be > 0 at y = 0");
    const double logp = -(nu + 1.0) * std::log(t) - nu * std::log(2.0) - std::lgamma(nu + 1.0) +
                        (2.0 * nu + 1.0) * std::log(z) - 0.5 * z * z / t;
    return std::exp(logp);
  }
  // (1/t) z^{nu+1} y^{-nu} exp(-(y-z)^2/(2t)) * [e^{-yz/t} I_nu(yz/t)]
  const double logp = -std::log(t) + (nu + 1.0) * std::log(z) - nu * std::log(y) -
                      0.5 * (y - z) * (y - z) / t + log_bessel_i_scaled(nu, y * z / t);
  return std::exp(logp);
}

double squared_bessel_bridge_point(const BesselOrder& order, double y, double z, double T, double t,
                                   RngStream& rng) {
  if (!(order.delta > 0.0)) throw std::domain_error("squared_bessel_bridge_point: delta must be > 0");
  if (!(T > 0.0) || !(t > 0.0) || !(t < T)) {
    throw std::domain_error("squared_bessel_bridge_point: need 0 < t < T");
  }
  if (y < 0.0 || z < 0.0) throw std::domain_error("squared_bessel_bridge_point: endpoints must be >= 0");
  const double x = std::sqrt(y * z) / T;
  std::uint64_t w = 0;
  if (x > 0.0) {
    w = BesselDiscrete(order.nu, x).sample(rng);
  }
  const double lam = 0.5 * (y * (T - t) / (t * T) + z * t / (T * (T - t)));
  const std::uint64_t v = sample_poisson(lam, rng);
  const double shape = static_cast<double>(v) + 2.0 * static_cast<double>(w) + order.nu + 1.0;
  const double rate = T / (2.0 * t * (T - t));
  return sample_gamma(shape, rate, rng);
}

double bessel_bridge_point(const BesselOrder& order, double y, double z, double T, double t, RngStream& rng) {
  if (y < 0.0 || z < 0.0) throw std::domain_error("bessel_bridge_point: endpoints must be >= 0");
  return std::sqrt(squared_bessel_bridge_point(order, y * y, z * z, T, t, rng));
}

}  // namespace exactdiff
