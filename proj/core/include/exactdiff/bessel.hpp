#pragma once

#include <cstdint>

#include "exactdiff/rng.hpp"

namespace exactdiff {

/// Bessel process dimension/order pair, kept consistent by construction:
/// delta = 2*nu + 2.
struct BesselOrder {
  double delta;
  double nu;

  static BesselOrder from_dimension(double delta) { return {delta, 0.5 * delta - 1.0}; }
  static BesselOrder from_order(double nu) { return {2.0 * nu + 2.0, nu}; }
};

/// e^{-x} I_nu(x) for nu >= -1, x >= 0. Relative error <= ~1e-12.
///
/// Power series (all terms positive, summed around the peak in log space) for
/// x <= 30; Hankel's large-argument expansion above. The scaled form is what
/// every density formula here consumes, so the e^{yz/t} overflow never
/// materializes.
double bessel_i_scaled(double nu, double x);

/// log(e^{-x} I_nu(x)); safe for arguments where the scaled value underflows.
double log_bessel_i_scaled(double nu, double x);

/// Discrete Bessel(nu, x) distribution: pmf(n) = (x/2)^{2n+nu} / (n! Gamma(nu+n+1) I_nu(x)).
struct BesselDiscrete {
  double nu;
  double x;

  BesselDiscrete(double nu_, double x_);

  /// pmf via the ratio recurrence from pmf(0), computed in log space.
  double pmf(std::uint64_t n) const;

  /// CDF-inversion sample; consumes exactly one uniform (1 logical draw).
  std::uint64_t sample(RngStream& rng) const;

 private:
  double log_p0_;  // log pmf(0)
};

/// Bessel transition density p^delta_t(y, z), y >= 0, z > 0, t > 0.
double bessel_transition_density(const BesselOrder& order, double t, double y, double z);

/// Marginal of a *squared* Bessel bridge y -> z over [0,T] at time t in (0,T).
/// y and z are squared-process endpoint values. Mixture construction:
/// W ~ Bessel(nu, sqrt(yz)/T), V ~ Poisson(...), then
/// Gamma(V + 2W + nu + 1, T / (2 t (T-t))).
double squared_bessel_bridge_point(const BesselOrder& order, double y, double z, double T, double t,
                                   RngStream& rng);

/// Marginal of a Bessel bridge with (non-squared) endpoints y -> z.
double bessel_bridge_point(const BesselOrder& order, double y, double z, double T, double t, RngStream& rng);

}  // namespace exactdiff
