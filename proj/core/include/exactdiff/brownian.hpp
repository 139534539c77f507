#pragma once

#include <optional>

#include "exactdiff/rng.hpp"

namespace exactdiff {

/// A Brownian bridge from y to z over [0, T].
struct BridgeSpec {
  double y;
  double z;
  double T;

  BridgeSpec(double y_, double z_, double T_);
};

/// Simulated bridge minimum together with the (a.s. unique) time it occurs.
struct MinRecord {
  double m;
  double tau;
};

struct MaxRecord {
  double m;
  double tau;
};

/// Gaussian marginal of the bridge at t in (0, T).
double bridge_point(const BridgeSpec& spec, double t, RngStream& rng);

/// P(min of the bridge <= a) = exp(-2 (a-y)(a-z) / T) for a <= min(y, z).
double bridge_min_cdf(const BridgeSpec& spec, double a);

/// P(max of the bridge >= b) mirror of the minimum law, b >= max(y, z).
double bridge_max_tail(const BridgeSpec& spec, double b);

/// Draw (m, tau). With `floor` given, the minimum is conditioned on m > floor
/// by CDF truncation (the regime near a boundary where plain rejection
/// degenerates). Throws std::domain_error when the truncation has zero mass.
MinRecord sample_min(const BridgeSpec& spec, RngStream& rng, std::optional<double> floor = std::nullopt);

/// Reflection of sample_min.
MaxRecord sample_max(const BridgeSpec& spec, RngStream& rng, std::optional<double> ceiling = std::nullopt);

/// Minimum conditioned into (lo, hi]; both bounds <= min(y,z). Used by the
/// layered proposal. Consumes one uniform for m and one draw for tau.
MinRecord sample_min_in_band(const BridgeSpec& spec, double lo, double hi, RngStream& rng);
MaxRecord sample_max_in_band(const BridgeSpec& spec, double lo, double hi, RngStream& rng);

/// Marginal at time t of the bridge conditioned on its minimum record.
/// The two path pieces either side of tau are dimension-3 Bessel bridges
/// pinned to 0 at tau; t == tau returns m exactly. Result >= m always.
double bridge_given_min(const BridgeSpec& spec, const MinRecord& min_rec, double t, RngStream& rng);
double bridge_given_max(const BridgeSpec& spec, const MaxRecord& max_rec, double t, RngStream& rng);

namespace detail {
/// Unnormalized conditional density of the time of the minimum given its
/// value: f(t) ∝ theta1 t^{-3/2} e^{-theta1^2/(2t)} * theta2 (T-t)^{-3/2}
/// e^{-theta2^2/(2(T-t))}. Exposed for the quadrature tests.
double time_of_min_density(double t, double theta1, double theta2, double T);

/// Inverse-CDF draw of tau given the minimum (adaptive tabulation, CDF
/// accuracy ~1e-10). One logical draw.
double sample_time_of_min(double theta1, double theta2, double T, RngStream& rng);
}  // namespace detail

}  // namespace exactdiff
