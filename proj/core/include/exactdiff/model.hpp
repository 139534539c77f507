#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>

namespace exactdiff {

enum class CandidateKind { Brownian, Bessel };

/// A target diffusion dY = alpha(Y) dt + dB on an interval, plus everything
/// the exact-sampling drivers need to know about it analytically.
///
/// phi(u) is 0.5*[alpha^2 + alpha'](u) - phi_floor for Brownian candidates and
/// 0.5*[alpha^2 - beta^2 + alpha' - beta'](u) - phi_floor for Bessel(delta)
/// candidates (beta the Bessel drift). phi_floor must sit at or below the
/// infimum of the halved bracket or the sampler is no longer exact; any lower
/// value only costs acceptance rate. rate_bound is the Poisson rectangle
/// height: any value >= sup phi is exact, tighter is cheaper.
struct UnitDiffusionSpec {
  std::string name;
  std::function<double(double)> drift;
  std::function<double(double)> drift_derivative;  // defaulted to central differences if empty
  std::function<double(double)> log_bias;          // A (Brownian) or A-tilde (Bessel), up to a constant
  double lower_boundary = -std::numeric_limits<double>::infinity();
  double upper_boundary = std::numeric_limits<double>::infinity();
  CandidateKind candidate = CandidateKind::Brownian;
  double delta = 0.0;  // Bessel candidate dimension (>= 2)
  double phi_floor = 0.0;
  double rate_bound = std::numeric_limits<double>::infinity();  // sup phi; may be +inf for EA2/EA3 targets

  /// Un-halved bracket [alpha^2 + alpha'] (Brownian) or
  /// [alpha^2 - beta^2 + alpha' - beta'] (Bessel). Models with a cancellation-
  /// free closed form set this; empty means compute from drift and
  /// drift_derivative.
  std::function<double(double)> bracket;

  /// sup_{u in [m, upper)} of phi, for EA2. Empty unless the model provides it.
  std::function<double(double)> band_sup;
  /// sup_{u in (lo, hi)} of phi, for EA3. Empty unless the model provides it.
  std::function<double(double, double)> interval_sup;

  double drift_deriv(double u) const;

  /// The halved bracket minus phi_floor; >= 0 wherever phi_floor is valid.
  double phi(double u) const;

  void validate() const;
};

/// eta(x) = int_xi^x du/sigma(u), by adaptive quadrature (relative 1e-10).
/// Models with a closed form use it directly instead of calling this.
double lamperti_transform(const std::function<double(double)>& sigma, double xi, double x);

/// Drift of the base diffusion conditioned on reaching high levels before 0:
/// alpha*(u) = alpha(u) + S'(u) / (S(u) - S(0)) with S'(u) = exp(-2 A(u)).
/// `log_scale_deriv` is -2A (so S' = exp(log_scale_deriv)). The denominator
/// integral must converge at 0.
double conditioned_drift(const std::function<double(double)>& base_drift,
                         const std::function<double(double)>& minus_two_A, double u);

/// Drift of the Bessel process in the wide sense:
/// (2 nu + 1)/(2x) + rho I_{nu+1}(rho x)/I_nu(rho x); rho = 0 reduces to the
/// Bessel process itself.
double wide_sense_bessel_drift(double nu, double rho, double x);

/// General population-growth diffusion, generator kappa x d/dx + (tau x +
/// omega x^2)/2 d^2/dx^2, after the Lamperti transform and conditioning on
/// long-term survival. Works in the shifted coordinate z = eta(x) - ln(tau)/
/// sqrt(omega), so the entrance boundary sits at 0.
struct GrowthModelParams {
  double kappa;
  double omega;
  double tau;

  GrowthModelParams(double kappa_, double omega_, double tau_);
};

/// Lamperti transform of the growth model in closed form (boundary at
/// ln(tau)/sqrt(omega)); exposed for tests against the quadrature route.
double growth_lamperti(const GrowthModelParams& p, double x);

/// Conditioned drift in the shifted coordinate, z > 0. Behaves as 3/(2z) +
/// O(z) at the boundary, matching a Bessel(4) candidate.
double growth_drift(const GrowthModelParams& p, double z);

/// d/dz of growth_drift, in closed form.
double growth_drift_derivative(const GrowthModelParams& p, double z);

/// Antiderivative A(z) = int growth_drift dz (up to a constant), closed form.
double growth_log_bias_brownian(const GrowthModelParams& p, double z);

/// Analytic bounds (lower, upper) for the un-halved bracket
/// [alpha^2 - beta^2 + alpha' - beta'](z) with beta the Bessel(4) drift:
/// lower = -kappa, upper = (omega - 2 kappa)^2/(4 omega) + 2 kappa.
std::pair<double, double> growth_phi_bounds(const GrowthModelParams& p);

struct GrowthSpecOptions {
  /// Overrides for the halved phi offset and the Poisson rectangle height;
  /// defaults: tight grid-refined infimum, tight grid-refined supremum.
  std::optional<double> phi_floor;
  std::optional<double> rate_bound;
};

/// Bessel(4)-candidate spec for Bessel-EA1 on the growth model.
UnitDiffusionSpec make_growth_bessel_spec(const GrowthModelParams& p, double delta = 4.0,
                                          const GrowthSpecOptions& opt = {});

/// Brownian-candidate spec for EA2 on the growth model.
UnitDiffusionSpec make_growth_brownian_spec(const GrowthModelParams& p, const GrowthSpecOptions& opt = {});

/// Wide-sense Bessel target with a Bessel(2 nu + 2) candidate. With rho = 0
/// this is the Bessel process targeted by itself: phi identically zero.
UnitDiffusionSpec make_wide_sense_bessel_spec(double nu, double rho);

/// sin-drift toy target on R for EA1 (phi bounded above).
UnitDiffusionSpec make_sine_drift_spec(double amplitude = 1.0);

/// Zero-drift target (Brownian motion): every candidate accepted.
UnitDiffusionSpec make_zero_drift_spec();

/// Toy target on (0,1) with drift c (1/u - 1/(1-u)): two entrance boundaries,
/// for EA3.
UnitDiffusionSpec make_two_boundary_toy_spec(double c);

}  // namespace exactdiff
