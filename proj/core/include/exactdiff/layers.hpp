#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "exactdiff/brownian.hpp"
#include "exactdiff/rng.hpp"

namespace exactdiff {

/// Certified enclosure of a probability: the true value lies in [lo, hi].
struct ProbBracket {
  double lo;
  double hi;
};

/// P(a Brownian bridge y -> z over [0, s] stays inside (L, U)), enclosed to
/// absolute width <= tol. Uses the reflection (image) expansion when the
/// interval is wide relative to sqrt(s) and the spectral expansion of the
/// absorbed transition density when it is narrow; both carry explicit tail
/// bounds.
ProbBracket bridge_band_probability(double y, double z, double s, double L, double U, double tol);

/// One segment of a path decomposed around a known extremum, in coordinates
/// shifted so the extremum floor sits at 0 (reflect first for a maximum).
/// Endpoints v0, v1 >= 0; v == 0 marks the segment pinned at the extremum.
struct BridgePiece {
  double s;
  double v0;
  double v1;
};

/// P(sup of the segment < h), enclosed to width <= tol. Segments pinned at 0
/// are dimension-3 Bessel bridges; unpinned segments are Brownian bridges
/// conditioned positive. h <= max(v0, v1) returns {0, 0}.
ProbBracket piece_stays_below(const BridgePiece& piece, double h, double tol);

/// Classification of the path supremum against two nested thresholds
/// h_inner <= h_outer (shifted coordinates), by inverse-CDF coupling on one
/// uniform: refine the products of piece brackets until the zone is decided.
enum class SupZone { AtOrAboveOuter, Between, BelowInner };
SupZone classify_sup_zone(std::span<const BridgePiece> pieces, double h_inner, double h_outer, double u);

/// Increasing layer widths a_i (below min(y,z)) and b_i (above max(y,z)) with
/// a_0 = b_0 = 0. A side facing a finite boundary converges to its gap
/// without attaining it, so every layer interval stays strictly inside the
/// state space.
struct LayerSpec {
  std::vector<double> a;
  std::vector<double> b;
  double gap_a = std::numeric_limits<double>::infinity();  // limit of a_i
  double gap_b = std::numeric_limits<double>::infinity();  // limit of b_i
  bool a_reaches_boundary = false;  // gap_a finite
  bool b_reaches_boundary = false;  // gap_b finite
  int max_index = 64;

  /// Geometric widths c*(2^i - 1) on unbounded sides; fixed-fraction-of-the-
  /// remaining-gap convergence on bounded sides. gap_* may be +inf.
  static LayerSpec geometric(double c_a, double c_b, double gap_a, double gap_b, int max_index = 64);

  int usable_layers() const { return static_cast<int>(a.size()) - 1; }
};

/// Default layers for a bridge inside (lower, upper): first widths cover
/// about a quarter of the gap to each boundary, doubling outward.
LayerSpec make_default_layers(const BridgeSpec& bridge, double lower, double upper, int max_index = 64);

struct LayerEventProb {
  double pU;  // single-extremum band probability for the maximum, W(M-bar_i)
  double pL;  // same for the minimum, W(M-underbar_i)
  double pD;  // two-sided layer probability W(D_i)
};

LayerEventProb layer_event_prob(const BridgeSpec& bridge, const LayerSpec& layers, int i);

/// Draw the layer index by sequential inversion over certified confinement
/// brackets. nullopt means the path leaves the outermost layer; for layers
/// clamped at both boundaries that is exactly the event that the candidate
/// exits the state space (rejected upstream). Throws NumericError if the
/// index cannot be decided within the refinement budget.
std::optional<int> sample_layer(const BridgeSpec& bridge, const LayerSpec& layers, RngStream& rng);

/// Mixture weight of Theorem-style proposal: lambda = W(Mbar_I) / (W(Mbar_I)
/// + W(Munder_I)). Throws std::domain_error when both band masses vanish.
double lambda_weight(const BridgeSpec& bridge, const LayerSpec& layers, int i);

struct ExtremumRecord {
  double value;
  double tau;
  bool is_max;
};

struct LayerProposal {
  ExtremumRecord extremum;
  std::vector<std::pair<double, double>> points;  // (t, value) at the requested times, same order
};

/// Sample from the lambda-mixture: pick the extremum branch, draw the
/// extremum constrained to its layer band, then fill the requested times from
/// the bridge conditioned on that extremum.
LayerProposal propose_layer_path(const BridgeSpec& bridge, const LayerSpec& layers, int i,
                                 std::span<const double> times, RngStream& rng);

/// Accept/reject correction from the proposal mixture to the bridge
/// conditioned on the layer event D_I: indicator of D_I over (1 + indicator
/// of U_I ∩ L_I), both simulated retrospectively from certified brackets.
bool accept_layer_path(const BridgeSpec& bridge, const LayerSpec& layers, int i,
                       const LayerProposal& proposal, RngStream& rng);

/// Same decision, also reporting which sup-zone was realized (needed to
/// condition later fill-in of accepted skeletons).
bool accept_layer_path_with_zone(const BridgeSpec& bridge, const LayerSpec& layers, int i,
                                 const LayerProposal& proposal, RngStream& rng, SupZone* zone_out);

}  // namespace exactdiff
