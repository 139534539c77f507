#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace exactdiff {

/// Tally of randomness consumed by a sampler or a whole run.
///
/// `raw_uniforms` counts canonical uniforms actually drawn from the stream.
/// `logical_draws` counts named variates (one normal, one gamma, one Poisson
/// count, ...) regardless of how many uniforms the method behind them spent.
struct DrawCounters {
  std::uint64_t raw_uniforms = 0;
  std::uint64_t logical_draws = 0;

  DrawCounters& operator+=(const DrawCounters& o) {
    raw_uniforms += o.raw_uniforms;
    logical_draws += o.logical_draws;
    return *this;
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counted source of canonical uniforms.
///
/// A single stream must not be shared across threads; derive one stream per
/// replicate with `RngStream(seed, replicate_index)` so results do not depend
/// on scheduling order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(splitmix64(seed)) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_index)
      : gen_(splitmix64(splitmix64(seed) ^ splitmix64(stream_index + 0x51ed270b7a2fe5a1ULL))) {}

  /// Uniform on the open interval (0,1); never returns 0 or 1.
  double uniform() {
    ++counters_.raw_uniforms;
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  const DrawCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = {}; }
  void add_logical(std::uint64_t n = 1) { counters_.logical_draws += n; }

 private:
  std::mt19937_64 gen_;
  DrawCounters counters_;
};

/// Standard normal via Box-Muller; 2 raw uniforms, 1 logical draw.
inline double sample_normal(RngStream& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  rng.add_logical();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// Exp(1); 1 raw uniform, 1 logical draw.
inline double sample_exponential(RngStream& rng) {
  const double u = rng.uniform();
  rng.add_logical();
  return -std::log(u);
}

namespace detail {

// Marsaglia-Tsang for shape >= 1. Does not touch logical counters.
inline double gamma_shape_ge1(double shape, RngStream& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      const double u1 = rng.uniform();
      const double u2 = rng.uniform();
      x = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace detail

/// Gamma(shape, rate); exact (Marsaglia-Tsang, with the U^{1/a} boost for
/// shape < 1). 1 logical draw.
inline double sample_gamma(double shape, double rate, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw std::domain_error("sample_gamma: shape and rate must be positive");
  rng.add_logical();
  if (shape >= 1.0) return detail::gamma_shape_ge1(shape, rng) / rate;
  const double g = detail::gamma_shape_ge1(shape + 1.0, rng);
  const double u = rng.uniform();
  return g * std::pow(u, 1.0 / shape) / rate;
}

namespace detail {

// Hormann's PTRD transformed-rejection Poisson sampler; exact for mu >= 10.
// Does not touch logical counters.
inline std::uint64_t poisson_ptrd(double mu, RngStream& rng) {
  const double smu = std::sqrt(mu);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double u;
    double v = rng.uniform();
    if (v <= 0.86 * v_r) {
      u = v / v_r - 0.43;
      return static_cast<std::uint64_t>(std::floor((2.0 * a / (0.5 - std::fabs(u)) + b) * u + mu + 0.445));
    }
    if (v >= v_r) {
      u = rng.uniform() - 0.5;
    } else {
      u = v / v_r - 0.93;
      u = (u < 0 ? -0.5 : 0.5) - u;
      v = rng.uniform() * v_r;
    }
    const double us = 0.5 - std::fabs(u);
    if (us < 0.013 && v > us) continue;
    const double k = std::floor((2.0 * a / us + b) * u + mu + 0.445);
    v = v * inv_alpha / (a / (us * us) + b);
    if (k >= 10.0) {
      if (std::log(v * smu) <= (k + 0.5) * std::log(mu / k) - mu - 0.5 * std::log(6.283185307179586) + k -
                                   (1.0 / 12.0 - 1.0 / (360.0 * k * k)) / k) {
        return static_cast<std::uint64_t>(k);
      }
    } else if (k >= 0.0) {
      if (std::log(v) <= k * std::log(mu) - mu - std::lgamma(k + 1.0)) {
        return static_cast<std::uint64_t>(k);
      }
    }
  }
}

}  // namespace detail

/// Poisson(mu); exact for all mu (inversion below 10, PTRD above).
/// 1 logical draw. mu = 0 consumes nothing and returns 0.
inline std::uint64_t sample_poisson(double mu, RngStream& rng) {
  if (!(mu >= 0.0)) throw std::domain_error("sample_poisson: mu must be >= 0");
  if (mu == 0.0) return 0;
  rng.add_logical();
  if (mu < 10.0) {
    // CDF inversion by sequential search; a single uniform.
    const double u = rng.uniform();
    double p = std::exp(-mu);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf && k < 1000000) {
      ++k;
      p *= mu / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  return detail::poisson_ptrd(mu, rng);
}

/// Bernoulli(p); 1 raw uniform, 1 logical draw.
inline bool sample_bernoulli(double p, RngStream& rng) {
  rng.add_logical();
  return rng.uniform() < p;
}

}  // namespace exactdiff
