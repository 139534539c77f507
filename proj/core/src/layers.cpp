#include "exactdiff/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "exactdiff/bessel.hpp"
#include "exactdiff/quadrature.hpp"

namespace exactdiff {

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;

ProbBracket clamp01(ProbBracket b) {
  b.lo = std::max(0.0, std::min(1.0, b.lo));
  b.hi = std::max(b.lo, std::min(1.0, b.hi));
  return b;
}

// Image expansion of P(BB y->z over s inside (L,U)):
//   sum_k [A_k - B_k],  A_k = exp(-2 kD (kD + d)/s),  B_k = exp(-2 (kD+p)(kD+q)/s)
// with D = U-L, d = z-y, p = y-L, q = z-L. Pairs (k, -k) decay like
// exp(-2 D^2 (k-1)^2 / s); the tail is bounded by a dominated geometric sum.
ProbBracket band_prob_images(double d, double p, double q, double D, double s, double tol) {
  const double c = 2.0 / s;
  double sum = 1.0 - std::exp(-c * p * q);  // k = 0
  for (int k = 1; k <= 64; ++k) {
    const double kD = k * D;
    const double a_plus = std::exp(-c * kD * (kD + d));
    const double a_minus = std::exp(-c * kD * (kD - d));
    const double b_plus = std::exp(-c * (kD + p) * (kD + q));
    const double b_minus = std::exp(-c * (kD - p) * (kD - q));
    sum += a_plus + a_minus - b_plus - b_minus;
    // Magnitude bound for the next pair and the dominated tail.
    const double next = 4.0 * std::exp(-c * D * D * k * k);  // (k+1)-pair uses exponent k^2
    const double ratio = std::exp(-c * D * D * (2.0 * k + 1.0));
    if (ratio < 0.5) {
      const double tail = next / (1.0 - ratio);
      if (tail < tol) return clamp01({sum - tail, sum + tail});
    }
  }
  throw NumericError("band_prob_images: series bracket failed to close");
}

// Spectral expansion via the absorbed density:
//   P = sqrt(2 pi s) e^{d^2/(2s)} (2/D) sum_n e^{-n^2 pi^2 s/(2 D^2)}
//       sin(n pi p / D) sin(n pi q / D).
ProbBracket band_prob_spectral(double d, double p, double q, double D, double s, double tol) {
  const double lam = kPi * kPi * s / (2.0 * D * D);
  const double pref = std::sqrt(2.0 * kPi * s) * std::exp(0.5 * d * d / s) * 2.0 / D;
  double sum = 0.0;
  for (int n = 1; n <= 20000; ++n) {
    sum += std::exp(-lam * n * n) * std::sin(n * kPi * p / D) * std::sin(n * kPi * q / D);
    const double head = std::exp(-lam * (n + 1.0) * (n + 1.0));
    const double ratio = std::exp(-lam * (2.0 * n + 3.0));
    if (ratio < 0.5) {
      const double tail = pref * head / (1.0 - ratio);
      if (tail < tol) return clamp01({pref * sum - tail, pref * sum + tail});
    }
  }
  throw NumericError("band_prob_spectral: series bracket failed to close");
}

}  // namespace

ProbBracket bridge_band_probability(double y, double z, double s, double L, double U, double tol) {
  if (!(U > L) || !(s > 0.0)) throw std::domain_error("bridge_band_probability: need U > L, s > 0");
  if (y <= L || y >= U || z <= L || z >= U) return {0.0, 0.0};
  const double D = U - L;
  const double d = z - y;
  const double p = y - L;
  const double q = z - L;
  if (D * D / s >= 0.5 * kPi) return band_prob_images(d, p, q, D, s, tol);
  return band_prob_spectral(d, p, q, D, s, tol);
}

namespace {

// P(sup < h) for a Bessel(3) bridge from 0 to b over [0, s] (the a -> 0 limit
// of a Brownian bridge conditioned positive):
//   sum_{k in Z} (1 + 2kh/b) exp(-2 k h (k h + b)/s).
ProbBracket pinned_below_images(double b, double s, double h, double tol) {
  double sum = 1.0;  // k = 0
  const double c = 2.0 / s;
  for (int k = 1; k <= 64; ++k) {
    const double kh = k * h;
    const double t_plus = (1.0 + 2.0 * kh / b) * std::exp(-c * kh * (kh + b));
    const double t_minus = (1.0 - 2.0 * kh / b) * std::exp(-c * kh * (kh - b));
    sum += t_plus + t_minus;
    const double kp = (k + 1.0) * h;
    const double next = 2.0 * (1.0 + 2.0 * kp / b) * std::exp(-c * kp * (kp - b));
    const double ratio = 2.0 * std::exp(-c * h * h * 2.0 * k);
    if (ratio < 0.5) {
      const double tail = next / (1.0 - ratio);
      if (tail < tol) return clamp01({sum - tail, sum + tail});
    }
  }
  throw NumericError("pinned_below_images: series bracket failed to close");
}

// Spectral form of the same probability:
//   P = (pi s sqrt(2 pi s) e^{b^2/(2s)} / (h^2 b)) sum_n n e^{-n^2 pi^2 s/(2h^2)} sin(n pi b / h).
ProbBracket pinned_below_spectral(double b, double s, double h, double tol) {
  const double lam = kPi * kPi * s / (2.0 * h * h);
  const double pref = kPi * s * std::sqrt(2.0 * kPi * s) * std::exp(0.5 * b * b / s) / (h * h * b);
  double sum = 0.0;
  for (int n = 1; n <= 20000; ++n) {
    sum += n * std::exp(-lam * n * n) * std::sin(n * kPi * b / h);
    const double head = (n + 1.0) * std::exp(-lam * (n + 1.0) * (n + 1.0));
    const double ratio = ((n + 2.0) / (n + 1.0)) * std::exp(-lam * (2.0 * n + 3.0));
    if (ratio < 0.5) {
      const double tail = pref * head / (1.0 - ratio);
      if (tail < tol) return clamp01({pref * sum - tail, pref * sum + tail});
    }
  }
  throw NumericError("pinned_below_spectral: series bracket failed to close");
}

}  // namespace

ProbBracket piece_stays_below(const BridgePiece& piece, double h, double tol) {
  const double s = piece.s;
  if (!(s > 0.0)) throw std::domain_error("piece_stays_below: duration must be > 0");
  if (piece.v0 < 0.0 || piece.v1 < 0.0) throw std::domain_error("piece_stays_below: negative endpoint");
  if (h <= std::max(piece.v0, piece.v1)) return {0.0, 0.0};
  const bool pinned0 = piece.v0 == 0.0;
  const bool pinned1 = piece.v1 == 0.0;
  if (pinned0 && pinned1) return {1.0, 1.0};  // zero-length extremum excursion, measure-zero call
  if (pinned0 || pinned1) {
    const double b = pinned0 ? piece.v1 : piece.v0;
    if (h * h / s >= 0.5 * kPi) return pinned_below_images(b, s, h, tol);
    return pinned_below_spectral(b, s, h, tol);
  }
  // Unpinned: Brownian bridge v0 -> v1 conditioned to stay above 0.
  const double denom = -std::expm1(-2.0 * piece.v0 * piece.v1 / s);
  const ProbBracket num = bridge_band_probability(piece.v0, piece.v1, s, 0.0, h, tol * denom);
  return clamp01({num.lo / denom, num.hi / denom});
}

SupZone classify_sup_zone(std::span<const BridgePiece> pieces, double h_inner, double h_outer, double u) {
  if (!(h_inner <= h_outer)) throw std::domain_error("classify_sup_zone: need h_inner <= h_outer");
  // P(sup < h) is the product of independent per-piece probabilities; couple
  // both thresholds through one uniform and refine until u separates.
  double tol = 1e-4;
  for (int round = 0; round < 14; ++round) {
    ProbBracket outer{1.0, 1.0};
    ProbBracket inner{1.0, 1.0};
    const double piece_tol = tol / (2.0 * static_cast<double>(pieces.size()) + 1.0);
    for (const auto& piece : pieces) {
      const ProbBracket po = piece_stays_below(piece, h_outer, piece_tol);
      const ProbBracket pi = piece_stays_below(piece, h_inner, piece_tol);
      outer = {outer.lo * po.lo, outer.hi * po.hi};
      inner = {inner.lo * pi.lo, inner.hi * pi.hi};
    }
    if (u >= outer.hi) return SupZone::AtOrAboveOuter;
    if (u < inner.lo) return SupZone::BelowInner;
    if (u < outer.lo && u >= inner.hi) return SupZone::Between;
    tol *= 1e-3;
    if (tol < 1e-18) break;
  }
  throw NumericError("classify_sup_zone: could not separate the uniform from the brackets");
}

LayerSpec LayerSpec::geometric(double c_a, double c_b, double gap_a, double gap_b, int max_index) {
  if (!(c_a > 0.0) || !(c_b > 0.0)) throw std::domain_error("LayerSpec::geometric: widths must be > 0");
  if (!(gap_a > 0.0) || !(gap_b > 0.0)) {
    throw std::domain_error("LayerSpec::geometric: layers lie entirely past a boundary");
  }
  // Unbounded sides grow geometrically; sides facing a finite boundary eat a
  // fixed fraction of the remaining gap each layer, converging to the
  // boundary without ever attaining it (the interval supremum of phi over
  // any single layer stays finite).
  LayerSpec spec;
  spec.max_index = max_index;
  spec.gap_a = gap_a;
  spec.gap_b = gap_b;
  spec.a_reaches_boundary = std::isfinite(gap_a);
  spec.b_reaches_boundary = std::isfinite(gap_b);
  spec.a.push_back(0.0);
  spec.b.push_back(0.0);
  for (int i = 1; i <= max_index; ++i) {
    const double w = std::exp2(static_cast<double>(i)) - 1.0;
    const double frac_a = std::min(c_a / gap_a, 0.5);
    const double frac_b = std::min(c_b / gap_b, 0.5);
    const double ai = spec.a_reaches_boundary ? gap_a * (1.0 - std::pow(1.0 - frac_a, i)) : c_a * w;
    const double bi = spec.b_reaches_boundary ? gap_b * (1.0 - std::pow(1.0 - frac_b, i)) : c_b * w;
    spec.a.push_back(ai);
    spec.b.push_back(bi);
  }
  return spec;
}

LayerSpec make_default_layers(const BridgeSpec& bridge, double lower, double upper, int max_index) {
  const double ybar = std::min(bridge.y, bridge.z);
  const double zbar = std::max(bridge.y, bridge.z);
  const double gap_a = ybar - lower;
  const double gap_b = upper - zbar;
  if (!(gap_a > 0.0) || !(gap_b > 0.0)) {
    throw std::domain_error("make_default_layers: endpoints must lie strictly inside (lower, upper)");
  }
  return LayerSpec::geometric(0.25 * gap_a, 0.25 * gap_b, gap_a, gap_b, max_index);
}

namespace {

struct LayerFrame {
  double ybar, zbar;
  // clamped widths for layer i
  double a(const LayerSpec& spec, int i) const {
    return spec.a[std::min<std::size_t>(i, spec.a.size() - 1)];
  }
  double b(const LayerSpec& spec, int i) const {
    return spec.b[std::min<std::size_t>(i, spec.b.size() - 1)];
  }
};

LayerFrame frame_of(const BridgeSpec& bridge) {
  return {std::min(bridge.y, bridge.z), std::max(bridge.y, bridge.z)};
}

// Band masses in width-offset form, so a symmetric configuration (y = z,
// a_i = b_i) evaluates both sides through bitwise-identical arithmetic and
// lambda comes out exactly one half.
double max_band_mass(const BridgeSpec& bridge, const LayerSpec& layers, int i) {
  const double zbar = std::max(bridge.y, bridge.z);
  const double gy = zbar - bridge.y, gz = zbar - bridge.z;  // one of them is 0
  auto tail = [&](double w) { return std::exp(-2.0 * (w + gy) * (w + gz) / bridge.T); };
  const double b_lo = layers.b[std::min<std::size_t>(i - 1, layers.b.size() - 1)];
  const double b_hi = layers.b[std::min<std::size_t>(i, layers.b.size() - 1)];
  return std::max(0.0, tail(b_lo) - tail(b_hi));
}

double min_band_mass(const BridgeSpec& bridge, const LayerSpec& layers, int i) {
  const double ybar = std::min(bridge.y, bridge.z);
  const double gy = bridge.y - ybar, gz = bridge.z - ybar;
  auto cdf_drop = [&](double w) { return std::exp(-2.0 * (w + gy) * (w + gz) / bridge.T); };
  const double a_lo = layers.a[std::min<std::size_t>(i - 1, layers.a.size() - 1)];
  const double a_hi = layers.a[std::min<std::size_t>(i, layers.a.size() - 1)];
  return std::max(0.0, cdf_drop(a_lo) - cdf_drop(a_hi));
}

}  // namespace

LayerEventProb layer_event_prob(const BridgeSpec& bridge, const LayerSpec& layers, int i) {
  if (i < 1) throw std::domain_error("layer_event_prob: i >= 1");
  const LayerFrame f = frame_of(bridge);
  const double pU = max_band_mass(bridge, layers, i);
  const double pL = min_band_mass(bridge, layers, i);
  auto confined = [&](int j) -> ProbBracket {
    if (j == 0) return {0.0, 0.0};
    return bridge_band_probability(bridge.y, bridge.z, bridge.T, f.ybar - f.a(layers, j),
                                   f.zbar + f.b(layers, j), 1e-13);
  };
  const ProbBracket ci = confined(i);
  const ProbBracket cim1 = confined(i - 1);
  const double pD = std::max(0.0, 0.5 * (ci.lo + ci.hi) - 0.5 * (cim1.lo + cim1.hi));
  return {pU, pL, pD};
}

namespace {

// P(the bridge stays inside the limiting layer envelope), as a certified
// bracket. One-sided and free cases are closed form.
ProbBracket stay_probability(const BridgeSpec& bridge, const LayerSpec& layers, const LayerFrame& f,
                             double tol) {
  const bool lo_fin = layers.a_reaches_boundary;
  const bool hi_fin = layers.b_reaches_boundary;
  if (lo_fin && hi_fin) {
    return bridge_band_probability(bridge.y, bridge.z, bridge.T, f.ybar - layers.gap_a,
                                   f.zbar + layers.gap_b, tol);
  }
  if (lo_fin) {
    const double L = f.ybar - layers.gap_a;
    const double p = -std::expm1(-2.0 * (bridge.y - L) * (bridge.z - L) / bridge.T);
    return {p, p};
  }
  if (hi_fin) {
    const double U = f.zbar + layers.gap_b;
    const double p = -std::expm1(-2.0 * (U - bridge.y) * (U - bridge.z) / bridge.T);
    return {p, p};
  }
  return {1.0, 1.0};
}

}  // namespace

std::optional<int> sample_layer(const BridgeSpec& bridge, const LayerSpec& layers, RngStream& rng) {
  const LayerFrame f = frame_of(bridge);
  const double u = rng.uniform();
  rng.add_logical();
  const int n = layers.usable_layers();
  double tol = 1e-8;
  for (int round = 0; round < 6; ++round) {
    // The event that the path leaves the layer envelope is decided against
    // the certified stay probability, not against the truncated layer sum.
    const ProbBracket stay = stay_probability(bridge, layers, f, tol);
    if (u > stay.hi) return std::nullopt;
    if (u > stay.lo) {
      tol *= 1e-3;
      continue;
    }
    ProbBracket prev{0.0, 0.0};
    bool undecided = false;
    for (int i = 1; i <= n; ++i) {
      const ProbBracket ci = bridge_band_probability(bridge.y, bridge.z, bridge.T, f.ybar - f.a(layers, i),
                                                     f.zbar + f.b(layers, i), tol);
      if (u > prev.hi && u <= ci.lo) return i;
      if (u <= prev.hi && u > prev.lo) {
        undecided = true;
        break;
      }
      prev = ci;
    }
    if (!undecided && u > prev.hi && tol < 1e-12) {
      // Inside the envelope but deeper than max_index layers; mass here is
      // negligible by construction and the spec treats it as a hard error.
      throw NumericError("sample_layer: uniform fell beyond max_index layers");
    }
    tol *= 1e-3;
  }
  throw NumericError("sample_layer: could not decide the layer index");
}

double lambda_weight(const BridgeSpec& bridge, const LayerSpec& layers, int i) {
  const LayerEventProb p = layer_event_prob(bridge, layers, i);
  if (!(p.pU + p.pL > 0.0)) throw std::domain_error("lambda_weight: both band probabilities vanish");
  return p.pU / (p.pU + p.pL);
}

namespace {

// Sequential conditional insertion: each new time is drawn given its two
// bracketing knots from the dimension-3 Bessel bridge piece above (below)
// the extremum. Joint law over several times, not a product of marginals.
double insert_extremum_conditioned(std::vector<std::pair<double, double>>& knots, const ExtremumRecord& ex,
                                   double t, RngStream& rng) {
  auto it = std::lower_bound(knots.begin(), knots.end(), t,
                             [](const auto& p, double tt) { return p.first < tt; });
  if (it != knots.end() && it->first == t) return it->second;
  if (it == knots.begin() || it == knots.end()) {
    throw std::domain_error("propose_layer_path: time outside [0, T]");
  }
  const auto [t1, v1] = *(it - 1);
  const auto [t2, v2] = *it;
  static const BesselOrder kBes3 = BesselOrder::from_dimension(3.0);
  double value;
  if (ex.is_max) {
    value = ex.value - bessel_bridge_point(kBes3, ex.value - v1, ex.value - v2, t2 - t1, t - t1, rng);
  } else {
    value = ex.value + bessel_bridge_point(kBes3, v1 - ex.value, v2 - ex.value, t2 - t1, t - t1, rng);
  }
  knots.insert(it, {t, value});
  return value;
}

}  // namespace

LayerProposal propose_layer_path(const BridgeSpec& bridge, const LayerSpec& layers, int i,
                                 std::span<const double> times, RngStream& rng) {
  const LayerFrame f = frame_of(bridge);
  const LayerEventProb p = layer_event_prob(bridge, layers, i);
  if (!(p.pU + p.pL > 0.0)) throw std::domain_error("propose_layer_path: empty layer");
  const double lambda = p.pU / (p.pU + p.pL);
  const bool use_max = lambda >= 1.0 ? true : (lambda <= 0.0 ? false : sample_bernoulli(lambda, rng));
  LayerProposal prop;
  if (use_max) {
    const MaxRecord rec =
        sample_max_in_band(bridge, f.zbar + f.b(layers, i - 1), f.zbar + f.b(layers, i), rng);
    prop.extremum = {rec.m, rec.tau, true};
  } else {
    const MinRecord rec =
        sample_min_in_band(bridge, f.ybar - f.a(layers, i), f.ybar - f.a(layers, i - 1), rng);
    prop.extremum = {rec.m, rec.tau, false};
  }
  std::vector<std::pair<double, double>> knots{
      {0.0, bridge.y}, {prop.extremum.tau, prop.extremum.value}, {bridge.T, bridge.z}};
  std::sort(knots.begin(), knots.end());
  prop.points.reserve(times.size());
  for (const double t : times) {
    prop.points.emplace_back(t, insert_extremum_conditioned(knots, prop.extremum, t, rng));
  }
  return prop;
}

namespace {

// Build the extremum-decomposed pieces in shifted coordinates: for a minimum
// record at (tau, m) the path is two independent Bessel(3)-type excursions
// above m; each inter-skeleton segment becomes one piece with endpoints
// (value - m). Maxima are reflected first so the same geometry applies.
std::vector<BridgePiece> build_pieces(const BridgeSpec& bridge, const LayerProposal& prop) {
  const bool mx = prop.extremum.is_max;
  const double e = prop.extremum.value;
  std::vector<std::pair<double, double>> knots;
  knots.reserve(prop.points.size() + 3);
  knots.emplace_back(0.0, mx ? e - bridge.y : bridge.y - e);
  for (const auto& [t, v] : prop.points) knots.emplace_back(t, mx ? e - v : v - e);
  knots.emplace_back(prop.extremum.tau, 0.0);
  knots.emplace_back(bridge.T, mx ? e - bridge.z : bridge.z - e);
  std::sort(knots.begin(), knots.end());
  std::vector<BridgePiece> pieces;
  pieces.reserve(knots.size() - 1);
  for (std::size_t k = 1; k < knots.size(); ++k) {
    const double s = knots[k].first - knots[k - 1].first;
    if (s <= 0.0) continue;
    pieces.push_back({s, knots[k - 1].second, knots[k].second});
  }
  return pieces;
}

}  // namespace

bool accept_layer_path(const BridgeSpec& bridge, const LayerSpec& layers, int i,
                       const LayerProposal& proposal, RngStream& rng) {
  SupZone zone;
  return accept_layer_path_with_zone(bridge, layers, i, proposal, rng, &zone);
}

bool accept_layer_path_with_zone(const BridgeSpec& bridge, const LayerSpec& layers, int i,
                                 const LayerProposal& proposal, RngStream& rng, SupZone* zone_out) {
  const LayerFrame f = frame_of(bridge);
  // On the chosen branch one band constraint holds by construction; the
  // indicator of D_I reduces to the far-side constraint, and U ∩ L to the
  // far-side extremum landing in its own layer band.
  double h_outer, h_inner;
  if (proposal.extremum.is_max) {
    // far side: the minimum; shifted coordinate measures depth below the max
    h_outer = proposal.extremum.value - (f.ybar - f.a(layers, i));
    h_inner = proposal.extremum.value - (f.ybar - f.a(layers, i - 1));
  } else {
    h_outer = (f.zbar + f.b(layers, i)) - proposal.extremum.value;
    h_inner = (f.zbar + f.b(layers, i - 1)) - proposal.extremum.value;
  }
  const auto pieces = build_pieces(bridge, proposal);
  // Skeleton values may already decide the outer indicator.
  double sup_skel = 0.0;
  for (const auto& piece : pieces) sup_skel = std::max({sup_skel, piece.v0, piece.v1});
  if (sup_skel >= h_outer) return false;  // path leaves D_I
  const double u = rng.uniform();
  rng.add_logical();
  // classify_sup_zone also covers skeleton points that already witness the
  // inner threshold: their pieces contribute exact-zero inner factors, which
  // rules BelowInner out while the outer constraint is still coined.
  const SupZone zone = classify_sup_zone(pieces, std::max(h_inner, 0.0), h_outer, u);
  *zone_out = zone;
  switch (zone) {
    case SupZone::AtOrAboveOuter:
      return false;
    case SupZone::BelowInner:
      return true;
    case SupZone::Between:
      return sample_bernoulli(0.5, rng);  // 1/(1 + indicator of U ∩ L)
  }
  return false;
}

}  // namespace exactdiff
