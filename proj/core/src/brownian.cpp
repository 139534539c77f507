#include "exactdiff/brownian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "exactdiff/bessel.hpp"
#include "exactdiff/quadrature.hpp"

namespace exactdiff {

BridgeSpec::BridgeSpec(double y_, double z_, double T_) : y(y_), z(z_), T(T_) {
  if (!(T > 0.0)) throw std::domain_error("BridgeSpec: T must be > 0");
  if (!std::isfinite(y) || !std::isfinite(z)) throw std::domain_error("BridgeSpec: endpoints must be finite");
}

double bridge_point(const BridgeSpec& spec, double t, RngStream& rng) {
  if (!(t > 0.0) || !(t < spec.T)) throw std::domain_error("bridge_point: t must lie in (0, T)");
  const double mean = spec.y + t / spec.T * (spec.z - spec.y);
  const double var = t * (spec.T - t) / spec.T;
  return mean + std::sqrt(var) * sample_normal(rng);
}

double bridge_min_cdf(const BridgeSpec& spec, double a) {
  if (a > std::min(spec.y, spec.z)) throw std::domain_error("bridge_min_cdf: a must be <= min(y, z)");
  return std::exp(-2.0 * (a - spec.y) * (a - spec.z) / spec.T);
}

double bridge_max_tail(const BridgeSpec& spec, double b) {
  if (b < std::max(spec.y, spec.z)) throw std::domain_error("bridge_max_tail: b must be >= max(y, z)");
  return std::exp(-2.0 * (b - spec.y) * (b - spec.z) / spec.T);
}

namespace detail {

double time_of_min_density(double t, double theta1, double theta2, double T) {
  if (t <= 0.0 || t >= T) return 0.0;
  const double a = theta1 <= 0.0 ? 0.0 : theta1 * std::pow(t, -1.5) * std::exp(-0.5 * theta1 * theta1 / t);
  const double b =
      theta2 <= 0.0 ? 0.0 : theta2 * std::pow(T - t, -1.5) * std::exp(-0.5 * theta2 * theta2 / (T - t));
  return a * b;
}

double sample_time_of_min(double theta1, double theta2, double T, RngStream& rng) {
  // Degenerate endpoints: the minimum sits at the matching end of the
  // interval in the limit; these arise only with measure zero.
  if (theta1 <= 0.0) return 0.0;
  if (theta2 <= 0.0) return T;
  // Peaks of the two first-passage kernels. When a theta is tiny the mass
  // piles up within O(theta^2) of the matching endpoint, far below the reach
  // of any uniform grid, so the initial nodes are geometric from both ends.
  const double s1 = theta1 * theta1;
  const double s2 = theta2 * theta2;
  const double lo = std::max(std::min(s1 * 1e-4, 1e-6 * T), 1e-200);
  const double hi = T - std::max(std::min(s2 * 1e-4, 1e-6 * T), std::max(1e-200, T * 1e-16));
  const double q1 = std::clamp(3.0 * s1, 16.0 * lo, 0.25 * T);
  const double q2 = std::clamp(T - 3.0 * s2, 0.75 * T, T - 16.0 * (T - hi));
  std::vector<double> nodes;
  nodes.reserve(260);
  const int n_geo = 72, n_mid = 96;
  for (int i = 0; i <= n_geo; ++i) nodes.push_back(lo * std::pow(q1 / lo, static_cast<double>(i) / n_geo));
  for (int i = 1; i < n_mid; ++i) nodes.push_back(q1 + (q2 - q1) * static_cast<double>(i) / n_mid);
  for (int i = 0; i <= n_geo; ++i) {
    nodes.push_back(T - (T - q2) * std::pow((T - hi) / (T - q2), static_cast<double>(i) / n_geo));
  }
  TabulatedInverseCdf table([=](double t) { return time_of_min_density(t, theta1, theta2, T); },
                            std::move(nodes), 1e-10);
  const double u = rng.uniform();
  rng.add_logical();
  return table.invert(u);
}

}  // namespace detail

MinRecord sample_min(const BridgeSpec& spec, RngStream& rng, std::optional<double> floor) {
  const double ymin = std::min(spec.y, spec.z);
  double e;
  if (floor) {
    if (!(*floor < ymin)) throw std::domain_error("sample_min: floor must be < min(y, z)");
    // Truncate the exponential behind the CDF inversion to m in (floor, ymin].
    const double cap = 2.0 * (spec.y - *floor) * (spec.z - *floor) / spec.T;
    const double u = rng.uniform();
    rng.add_logical();
    e = -std::log1p(-u * (1.0 - std::exp(-cap)));
  } else {
    e = sample_exponential(rng);
  }
  const double d = spec.y - spec.z;
  const double m = 0.5 * (spec.y + spec.z - std::sqrt(d * d + 2.0 * spec.T * e));
  const double tau = detail::sample_time_of_min(spec.y - m, spec.z - m, spec.T, rng);
  return {m, tau};
}

MinRecord sample_min_in_band(const BridgeSpec& spec, double lo, double hi, RngStream& rng) {
  const double ymin = std::min(spec.y, spec.z);
  if (!(lo < hi) || !(hi <= ymin)) throw std::domain_error("sample_min_in_band: need lo < hi <= min(y, z)");
  const double Flo = bridge_min_cdf(spec, lo);
  const double Fhi = bridge_min_cdf(spec, hi);
  if (!(Fhi > Flo)) throw std::domain_error("sample_min_in_band: band has zero probability");
  const double u = rng.uniform();
  rng.add_logical();
  const double F = Flo + u * (Fhi - Flo);
  // Invert exp(-2 (m-y)(m-z)/T) = F for m <= min(y, z).
  const double e = -std::log(F);
  const double d = spec.y - spec.z;
  const double m = 0.5 * (spec.y + spec.z - std::sqrt(d * d + 2.0 * spec.T * e));
  const double tau = detail::sample_time_of_min(spec.y - m, spec.z - m, spec.T, rng);
  return {m, tau};
}

MaxRecord sample_max(const BridgeSpec& spec, RngStream& rng, std::optional<double> ceiling) {
  std::optional<double> floor;
  if (ceiling) floor = -*ceiling;
  const MinRecord rec = sample_min(BridgeSpec(-spec.y, -spec.z, spec.T), rng, floor);
  return {-rec.m, rec.tau};
}

MaxRecord sample_max_in_band(const BridgeSpec& spec, double lo, double hi, RngStream& rng) {
  const MinRecord rec = sample_min_in_band(BridgeSpec(-spec.y, -spec.z, spec.T), -hi, -lo, rng);
  return {-rec.m, rec.tau};
}

double bridge_given_min(const BridgeSpec& spec, const MinRecord& min_rec, double t, RngStream& rng) {
  if (!(t >= 0.0) || !(t <= spec.T)) throw std::domain_error("bridge_given_min: t must lie in [0, T]");
  const double m = min_rec.m;
  const double tau = min_rec.tau;
  if (t == 0.0) return spec.y;
  if (t == spec.T) return spec.z;
  if (t == tau) return m;
  static const BesselOrder kBes3 = BesselOrder::from_dimension(3.0);
  if (t < tau) {
    // Piece on [0, tau], pinned to 0 at tau: Bessel(3) bridge from y-m to 0.
    return m + bessel_bridge_point(kBes3, spec.y - m, 0.0, tau, t, rng);
  }
  return m + bessel_bridge_point(kBes3, 0.0, spec.z - m, spec.T - tau, t - tau, rng);
}

double bridge_given_max(const BridgeSpec& spec, const MaxRecord& max_rec, double t, RngStream& rng) {
  const MinRecord rec{-max_rec.m, max_rec.tau};
  return -bridge_given_min(BridgeSpec(-spec.y, -spec.z, spec.T), rec, t, rng);
}

}  // namespace exactdiff
