#include "exactdiff/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "exactdiff/bessel.hpp"

namespace exactdiff {

namespace {

// Sorted-skeleton insertion: value at a new time conditional on its two
// bracketing points, from the candidate-bridge law. The Markov property of
// every candidate family makes this exact in any processing order. A map
// keeps inserts logarithmic; blow-up candidates can carry 10^5+ points.
struct SkeletonBuilder {
  std::map<double, double> pts;
  CandidateKind candidate;
  double delta = 0.0;
  // Minimum / layer-extremum conditioning in shifted coordinates.
  bool has_extremum = false;
  double extremum_value = 0.0;
  bool extremum_is_max = false;

  void seed(std::initializer_list<std::pair<double, double>> knots) {
    for (const auto& [t, v] : knots) pts.emplace(t, v);
  }

  std::vector<std::pair<double, double>> sorted_points() const {
    return {pts.begin(), pts.end()};
  }

  double insert(double t, RngStream& rng) {
    auto it = pts.lower_bound(t);
    if (it != pts.end() && it->first == t) return it->second;
    if (it == pts.begin() || it == pts.end()) throw std::domain_error("skeleton insert: time outside [0, T]");
    const auto [t2, v2] = *it;
    const auto [t1, v1] = *std::prev(it);
    const double value = conditional_point(t1, v1, t2, v2, t, rng);
    pts.emplace_hint(it, t, value);
    return value;
  }

  double conditional_point(double t1, double v1, double t2, double v2, double t, RngStream& rng) const {
    const double s = t2 - t1;
    const double u = t - t1;
    if (has_extremum) {
      static const BesselOrder kBes3 = BesselOrder::from_dimension(3.0);
      if (extremum_is_max) {
        return extremum_value - bessel_bridge_point(kBes3, extremum_value - v1, extremum_value - v2, s, u, rng);
      }
      return extremum_value + bessel_bridge_point(kBes3, v1 - extremum_value, v2 - extremum_value, s, u, rng);
    }
    if (candidate == CandidateKind::Bessel) {
      return bessel_bridge_point(BesselOrder::from_dimension(delta), v1, v2, s, u, rng);
    }
    const double mean = v1 + (v2 - v1) * u / s;
    return mean + std::sqrt(u * (s - u) / s) * sample_normal(rng);
  }
};

double log_transition_density_bessel(const BesselOrder& order, double t, double y, double z) {
  const double nu = order.nu;
  if (z <= 0.0) return -std::numeric_limits<double>::infinity();
  if (y == 0.0) {
    return -(nu + 1.0) * std::log(t) - nu * std::log(2.0) - std::lgamma(nu + 1.0) +
           (2.0 * nu + 1.0) * std::log(z) - 0.5 * z * z / t;
  }
  return -std::log(t) + (nu + 1.0) * std::log(z) - nu * std::log(y) - 0.5 * (y - z) * (y - z) / t +
         log_bessel_i_scaled(nu, y * z / t);
}

}  // namespace

EndpointSampler::EndpointSampler(const UnitDiffusionSpec& spec, double y, double T) {
  const bool bessel = spec.candidate == CandidateKind::Bessel;
  const BesselOrder order = BesselOrder::from_dimension(bessel ? spec.delta : 2.0);
  auto log_density = [&spec, order, y, T, bessel](double u) -> double {
    double lf;
    if (bessel) {
      if (u <= 0.0) return -std::numeric_limits<double>::infinity();
      lf = log_transition_density_bessel(order, T, y, u);
    } else {
      lf = -0.5 * (u - y) * (u - y) / T;
    }
    if (spec.log_bias) lf += spec.log_bias(u);
    return lf;
  };
  const double st = std::sqrt(T);
  double lo = bessel ? std::max(spec.lower_boundary, 0.0) + 1e-14 * std::max(1.0, y)
                     : std::max(spec.lower_boundary, y - 8.0 * st);
  double hi = std::min(spec.upper_boundary, y + 8.0 * st);
  if (bessel) hi = std::min(spec.upper_boundary, y + 8.0 * st + 4.0 * T);  // allow drifted mass
  // Peak of the log-density over a coarse scan.
  double peak = -std::numeric_limits<double>::infinity();
  auto rescan = [&] {
    for (int i = 0; i <= 128; ++i) {
      peak = std::max(peak, log_density(lo + (hi - lo) * i / 128.0));
    }
  };
  rescan();
  // Expand the support until the edge density is negligible; a persistently
  // heavy edge means the bias defeats the Gaussian/Bessel tail, i.e. h is not
  // integrable.
  const double peak0 = peak;
  // A tail that climbs hundreds of nats above the interior peak while the
  // support expands means the bias defeats the Gaussian/Bessel tail: h is
  // not integrable. The absolute-rise test also keeps the log comparisons
  // inside floating-point resolution.
  auto diverged = [&](double edge_value) { return edge_value > peak0 + 200.0; };
  int expansions = 0;
  while (log_density(hi) > peak - 60.0 && std::isfinite(peak)) {
    if (diverged(log_density(hi))) {
      throw std::domain_error("EndpointSampler: endpoint bias appears non-integrable (upper tail)");
    }
    hi = std::min(spec.upper_boundary, hi + 4.0 * st * std::pow(1.5, expansions));
    if (++expansions > 60 || hi >= spec.upper_boundary) break;
    rescan();
  }
  if (hi < spec.upper_boundary && !(log_density(hi) <= peak - 40.0)) {
    throw std::domain_error("EndpointSampler: endpoint bias appears non-integrable (upper tail)");
  }
  if (!bessel) {
    expansions = 0;
    while (log_density(lo) > peak - 60.0 && std::isfinite(peak) && lo > spec.lower_boundary) {
      if (diverged(log_density(lo))) {
        throw std::domain_error("EndpointSampler: endpoint bias appears non-integrable (lower tail)");
      }
      lo = std::max(spec.lower_boundary, lo - 4.0 * st * std::pow(1.5, expansions));
      if (++expansions > 60 || lo <= spec.lower_boundary) break;
      rescan();
    }
    if (lo > spec.lower_boundary && !(log_density(lo) <= peak - 40.0)) {
      throw std::domain_error("EndpointSampler: endpoint bias appears non-integrable (lower tail)");
    }
  }
  lo_ = lo;
  hi_ = hi;
  const double peak_final = peak;
  table_ = std::make_shared<TabulatedInverseCdf>(
      [log_density, peak_final](double u) { return std::exp(log_density(u) - peak_final); }, lo, hi, 1e-12);
}

double EndpointSampler::sample(RngStream& rng) const {
  const double u = rng.uniform();
  rng.add_logical();
  return table_->invert(u);
}

ExactSampler::ExactSampler(Algorithm alg, UnitDiffusionSpec spec, double y, double T, EngineOptions options)
    : alg_(alg), spec_(std::move(spec)), y_(y), T_(T), opt_(std::move(options)) {
  spec_.validate();
  if (!(T_ > 0.0)) throw std::invalid_argument("ExactSampler: T must be > 0");
  if (!(y_ > spec_.lower_boundary) || !(y_ < spec_.upper_boundary)) {
    throw std::domain_error("ExactSampler: y must lie inside the state space");
  }
  switch (alg_) {
    case Algorithm::EA1:
      if (spec_.candidate != CandidateKind::Brownian) {
        throw std::invalid_argument("run_ea1: spec must use a Brownian candidate");
      }
      if (!std::isfinite(spec_.rate_bound)) throw std::invalid_argument("run_ea1: phi must be bounded above");
      break;
    case Algorithm::EA2:
      if (spec_.candidate != CandidateKind::Brownian) {
        throw std::invalid_argument("run_ea2: spec must use a Brownian candidate");
      }
      if (!spec_.band_sup) throw std::invalid_argument("run_ea2: spec must provide a band supremum");
      break;
    case Algorithm::BesselEA1:
      if (spec_.candidate != CandidateKind::Bessel) {
        throw std::invalid_argument("run_bessel_ea1: spec must use a Bessel candidate");
      }
      if (!(spec_.delta >= 2.0)) throw std::invalid_argument("run_bessel_ea1: delta must be >= 2");
      if (!(y_ > 0.0)) throw std::domain_error("run_bessel_ea1: y must be > 0");
      if (!std::isfinite(spec_.rate_bound)) {
        throw std::invalid_argument("run_bessel_ea1: phi-tilde must be bounded above");
      }
      break;
    case Algorithm::EA3:
      if (spec_.candidate != CandidateKind::Brownian) {
        throw std::invalid_argument("run_ea3: spec must use a Brownian candidate");
      }
      if (!std::isfinite(spec_.lower_boundary) || !std::isfinite(spec_.upper_boundary)) {
        if (!opt_.layers) {
          throw std::invalid_argument("run_ea3: both boundaries finite or explicit layers required");
        }
      }
      if (!spec_.interval_sup) throw std::invalid_argument("run_ea3: spec must provide an interval supremum");
      break;
  }
  if (opt_.fixed_endpoint) {
    const double z = *opt_.fixed_endpoint;
    if (!(z > spec_.lower_boundary) || !(z < spec_.upper_boundary)) {
      throw std::domain_error("ExactSampler: fixed endpoint must lie inside the state space");
    }
  } else {
    endpoint_ = std::make_shared<EndpointSampler>(spec_, y_, T_);
  }
}

double ExactSampler::draw_endpoint(RngStream& rng) const {
  if (opt_.fixed_endpoint) return *opt_.fixed_endpoint;
  return endpoint_->sample(rng);
}

namespace {

struct PathBudget {
  const DrawCounters& counters;
  std::uint64_t start_logical;
  std::uint64_t cap;

  PathBudget(RngStream& r, std::uint64_t cap_)
      : counters(r.counters()), start_logical(counters.logical_draws), cap(cap_) {}
  std::uint64_t used() const { return counters.logical_draws - start_logical; }
  void check() const {
    if (used() > cap) throw ResourceCapError("per-path variate cap exceeded");
  }
};

}  // namespace

Skeleton ExactSampler::run_ea1_impl(RngStream& rng, RunCounters& rc) const {
  PathBudget budget(rng, opt_.max_logical_per_path);
  for (std::uint64_t attempt = 1; attempt <= opt_.max_attempts_per_path; ++attempt) {
    ++rc.attempts;
    const double z = draw_endpoint(rng);
    SkeletonBuilder sk;
    sk.candidate = CandidateKind::Brownian;
    sk.seed({{0.0, y_}, {T_, z}});
    const double rate = spec_.rate_bound;
    const std::uint64_t n = rate > 0.0 ? sample_poisson(rate * T_, rng) : 0;
    rc.poisson_points += n;
    rng.add_logical(2 * n);  // the realization of Phi is charged whole
    budget.check();
    bool ok = true;
    for (std::uint64_t j = 0; j < n; ++j) {
      const double chi = T_ * rng.uniform();
      const double psi = rate * rng.uniform();
      const double v = sk.insert(chi, rng);
      ++rc.skeleton_points;
      if (psi < spec_.phi(v)) {
        ok = false;
        break;
      }
    }
    budget.check();
    if (ok) {
      Skeleton out;
      out.points = sk.sorted_points();
      out.candidate = CandidateKind::Brownian;
      out.conditioning = Conditioning::None;
      out.attempts_used = attempt;
      return out;
    }
  }
  throw NumericError("run_ea1: attempt cap exceeded");
}

Skeleton ExactSampler::run_ea2_impl(RngStream& rng, RunCounters& rc) const {
  PathBudget budget(rng, opt_.max_logical_per_path);
  for (std::uint64_t attempt = 1; attempt <= opt_.max_attempts_per_path; ++attempt) {
    ++rc.attempts;
    const double z = draw_endpoint(rng);
    const BridgeSpec bridge(y_, z, T_);
    std::optional<double> floor;
    if (opt_.positive_min) {
      if (!std::isfinite(spec_.lower_boundary)) {
        throw std::invalid_argument("run_ea2: positivity conditioning needs a finite lower boundary");
      }
      floor = spec_.lower_boundary;
    }
    const MinRecord rec = sample_min(bridge, rng, floor);
    const double rate = spec_.band_sup(rec.m);
    if (!std::isfinite(rate)) {
      throw NumericError("run_ea2: band supremum unbounded at the sampled minimum");
    }
    const std::uint64_t n = rate > 0.0 ? sample_poisson(rate * T_, rng) : 0;
    rc.poisson_points += n;
    rng.add_logical(2 * n);
    budget.check();
    SkeletonBuilder sk;
    sk.candidate = CandidateKind::Brownian;
    sk.has_extremum = true;
    sk.extremum_value = rec.m;
    sk.extremum_is_max = false;
    sk.seed({{0.0, y_}, {rec.tau, rec.m}, {T_, z}});
    bool ok = true;
    for (std::uint64_t j = 0; j < n; ++j) {
      const double chi = T_ * rng.uniform();
      const double psi = rate * rng.uniform();
      const double v = sk.insert(chi, rng);
      ++rc.skeleton_points;
      if (psi < spec_.phi(v)) {
        ok = false;
        break;
      }
    }
    budget.check();
    if (ok) {
      Skeleton out;
      out.points = sk.sorted_points();
      out.candidate = CandidateKind::Brownian;
      out.conditioning = Conditioning::Minimum;
      out.min_record = rec;
      out.attempts_used = attempt;
      return out;
    }
  }
  throw NumericError("run_ea2: attempt cap exceeded");
}

Skeleton ExactSampler::run_bessel_ea1_impl(RngStream& rng, RunCounters& rc) const {
  PathBudget budget(rng, opt_.max_logical_per_path);
  for (std::uint64_t attempt = 1; attempt <= opt_.max_attempts_per_path; ++attempt) {
    ++rc.attempts;
    const double z = draw_endpoint(rng);
    SkeletonBuilder sk;
    sk.candidate = CandidateKind::Bessel;
    sk.delta = spec_.delta;
    sk.seed({{0.0, y_}, {T_, z}});
    const double rate = spec_.rate_bound;
    const std::uint64_t n = rate > 0.0 ? sample_poisson(rate * T_, rng) : 0;
    rc.poisson_points += n;
    rng.add_logical(2 * n);
    budget.check();
    bool ok = true;
    for (std::uint64_t j = 0; j < n; ++j) {
      const double chi = T_ * rng.uniform();
      const double psi = rate * rng.uniform();
      const double v = sk.insert(chi, rng);
      ++rc.skeleton_points;
      if (psi < spec_.phi(v)) {
        ok = false;
        break;
      }
    }
    budget.check();
    if (ok) {
      Skeleton out;
      out.points = sk.sorted_points();
      out.candidate = CandidateKind::Bessel;
      out.delta = spec_.delta;
      out.conditioning = Conditioning::None;
      out.attempts_used = attempt;
      return out;
    }
  }
  throw NumericError("run_bessel_ea1: attempt cap exceeded");
}

Skeleton ExactSampler::run_ea3_impl(RngStream& rng, RunCounters& rc) const {
  PathBudget budget(rng, opt_.max_logical_per_path);
  for (std::uint64_t attempt = 1; attempt <= opt_.max_attempts_per_path; ++attempt) {
    ++rc.attempts;
    const double z = draw_endpoint(rng);
    const BridgeSpec bridge(y_, z, T_);
    const LayerSpec layers =
        opt_.layers ? *opt_.layers : make_default_layers(bridge, spec_.lower_boundary, spec_.upper_boundary);
    const auto idx = sample_layer(bridge, layers, rng);
    if (!idx) continue;  // candidate leaves the interval: phi integral is infinite
    const int i = *idx;
    const double ybar = std::min(y_, z), zbar = std::max(y_, z);
    const double lo = ybar - layers.a[std::min<std::size_t>(i, layers.a.size() - 1)];
    const double hi = zbar + layers.b[std::min<std::size_t>(i, layers.b.size() - 1)];
    const double rate = spec_.interval_sup(lo, hi);
    if (!std::isfinite(rate)) throw NumericError("run_ea3: interval supremum unbounded");
    const std::uint64_t n = rate > 0.0 ? sample_poisson(rate * T_, rng) : 0;
    rc.poisson_points += n;
    rng.add_logical(2 * n);
    budget.check();
    std::vector<double> times(n);
    std::vector<double> heights(n);
    for (std::uint64_t j = 0; j < n; ++j) {
      times[j] = T_ * rng.uniform();
      heights[j] = rate * rng.uniform();
    }
    // Simulating Y at the mark times *given its layer* is itself a rejection
    // sampler (mixture proposal corrected by the indicator coins); retries
    // stay within the same layer. Expected retries are bounded by
    // (pU + pL)/pD summed against the layer law.
    LayerProposal proposal;
    SupZone zone{};
    bool proposal_ok = false;
    for (int retry = 0; retry < 100000 && !proposal_ok; ++retry) {
      proposal = propose_layer_path(bridge, layers, i, times, rng);
      proposal_ok = accept_layer_path_with_zone(bridge, layers, i, proposal, rng, &zone);
      budget.check();
    }
    if (!proposal_ok) throw NumericError("run_ea3: layer-conditional proposal loop exhausted");
    rc.skeleton_points += n;
    bool ok = true;
    for (std::uint64_t j = 0; j < n; ++j) {
      const double v = proposal.points[j].second;
      if (heights[j] < spec_.phi(v)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    budget.check();
    Skeleton out;
    out.points.reserve(n + 3);
    out.points.emplace_back(0.0, y_);
    for (const auto& p : proposal.points) out.points.push_back(p);
    out.points.emplace_back(proposal.extremum.tau, proposal.extremum.value);
    out.points.emplace_back(T_, z);
    std::sort(out.points.begin(), out.points.end());
    out.candidate = CandidateKind::Brownian;
    out.conditioning = Conditioning::Layer;
    out.extremum = proposal.extremum;
    out.layer_index = i;
    out.layer_zone = zone;
    out.layers = layers;
    out.attempts_used = attempt;
    return out;
  }
  throw NumericError("run_ea3: attempt cap exceeded");
}

Skeleton ExactSampler::run(RngStream& rng, RunCounters* counters) const {
  RunCounters local;
  const DrawCounters before = rng.counters();
  Skeleton out;
  switch (alg_) {
    case Algorithm::EA1:
      out = run_ea1_impl(rng, local);
      break;
    case Algorithm::EA2:
      out = run_ea2_impl(rng, local);
      break;
    case Algorithm::BesselEA1:
      out = run_bessel_ea1_impl(rng, local);
      break;
    case Algorithm::EA3:
      out = run_ea3_impl(rng, local);
      break;
  }
  const DrawCounters after = rng.counters();
  local.logical_draws = after.logical_draws - before.logical_draws;
  local.raw_uniforms = after.raw_uniforms - before.raw_uniforms;
  if (counters) *counters += local;
  return out;
}

Skeleton run_ea1(const UnitDiffusionSpec& spec, double y, double T, RngStream& rng,
                 const EngineOptions& options, RunCounters* counters) {
  return ExactSampler(ExactSampler::Algorithm::EA1, spec, y, T, options).run(rng, counters);
}

Skeleton run_ea2(const UnitDiffusionSpec& spec, double y, double T, RngStream& rng,
                 const EngineOptions& options, RunCounters* counters) {
  return ExactSampler(ExactSampler::Algorithm::EA2, spec, y, T, options).run(rng, counters);
}

Skeleton run_bessel_ea1(const UnitDiffusionSpec& spec, double y, double T, RngStream& rng,
                        const EngineOptions& options, RunCounters* counters) {
  return ExactSampler(ExactSampler::Algorithm::BesselEA1, spec, y, T, options).run(rng, counters);
}

Skeleton run_ea3_two_boundary(const UnitDiffusionSpec& spec, double y, double T, RngStream& rng,
                              const EngineOptions& options, RunCounters* counters) {
  return ExactSampler(ExactSampler::Algorithm::EA3, spec, y, T, options).run(rng, counters);
}

namespace {

// Bracketed Bernoulli: refine p's enclosure until u separates.
template <typename BracketFn>
bool bracket_coin(double u, BracketFn p_bracket) {
  double tol = 1e-5;
  for (int round = 0; round < 12; ++round) {
    const ProbBracket b = p_bracket(tol);
    if (u < b.lo) return true;
    if (u >= b.hi) return false;
    tol *= 1e-3;
  }
  throw NumericError("bracket_coin: could not separate the uniform");
}

// Threshold geometry of a layered skeleton, shifted so the extremum is 0.
struct LayerGeometry {
  double h_inner, h_outer;
  bool is_max;
  double extremum;

  double shift(double v) const { return is_max ? extremum - v : v - extremum; }
  double unshift(double w) const { return is_max ? extremum - w : extremum + w; }
};

LayerGeometry layer_geometry(const Skeleton& sk) {
  const double y = sk.points.front().second, z = sk.points.back().second;
  const double ybar = std::min(y, z), zbar = std::max(y, z);
  const int i = sk.layer_index;
  const auto& L = sk.layers;
  const double a_i = L.a[std::min<std::size_t>(i, L.a.size() - 1)];
  const double a_im1 = L.a[std::min<std::size_t>(i - 1, L.a.size() - 1)];
  const double b_i = L.b[std::min<std::size_t>(i, L.b.size() - 1)];
  const double b_im1 = L.b[std::min<std::size_t>(i - 1, L.b.size() - 1)];
  LayerGeometry g{};
  g.is_max = sk.extremum.is_max;
  g.extremum = sk.extremum.value;
  if (g.is_max) {
    g.h_outer = g.extremum - (ybar - a_i);
    g.h_inner = g.extremum - (ybar - a_im1);
  } else {
    g.h_outer = (zbar + b_i) - g.extremum;
    g.h_inner = (zbar + b_im1) - g.extremum;
  }
  return g;
}

ProbBracket product_below(const std::vector<BridgePiece>& pieces, double h, double tol) {
  ProbBracket acc{1.0, 1.0};
  const double piece_tol = tol / (static_cast<double>(pieces.size()) + 1.0);
  for (const auto& piece : pieces) {
    const ProbBracket b = piece_stays_below(piece, h, piece_tol);
    acc = {acc.lo * b.lo, acc.hi * b.hi};
  }
  return acc;
}

// Conditional draw of one extra point of a layered skeleton. The candidate
// point is proposed from the plain extremum-decomposed bridge law and
// accepted with the probability that the decided sup-zone outcome survives
// the split of its segment.
double layered_fill_point(const Skeleton& sk, std::map<double, double>& pts, double t, RngStream& rng) {
  const LayerGeometry g = layer_geometry(sk);
  auto it = pts.lower_bound(t);
  if (it != pts.end() && it->first == t) return it->second;
  if (it == pts.begin() || it == pts.end()) throw std::domain_error("fill_in: time outside [0, T]");
  const auto [t2, v2] = *it;
  const auto [t1, v1] = *std::prev(it);
  const double w1 = g.shift(v1), w2 = g.shift(v2);
  const double s = t2 - t1;
  static const BesselOrder kBes3 = BesselOrder::from_dimension(3.0);

  // Fixed factors from all other segments.
  std::vector<BridgePiece> others;
  double sup_skel = 0.0;
  double prev_t = 0.0, prev_v = 0.0;
  bool first = true;
  for (const auto& [tk, vk] : pts) {
    sup_skel = std::max(sup_skel, g.shift(vk));
    if (!first) {
      const double ds = tk - prev_t;
      if (ds > 0.0 && prev_t != t1) others.push_back({ds, g.shift(prev_v), g.shift(vk)});
    }
    prev_t = tk;
    prev_v = vk;
    first = false;
  }

  for (int tries = 0; tries < 100000; ++tries) {
    const double w = bessel_bridge_point(kBes3, w1, w2, s, t - t1, rng);
    const BridgePiece left{t - t1, w1, w};
    const BridgePiece right{t2 - t, w, w2};
    const double u = rng.uniform();
    rng.add_logical();
    bool accepted;
    if (sk.layer_zone == SupZone::BelowInner) {
      accepted = bracket_coin(u, [&](double tol) {
        const ProbBracket a = piece_stays_below(left, g.h_inner, tol * 0.5);
        const ProbBracket b = piece_stays_below(right, g.h_inner, tol * 0.5);
        return ProbBracket{a.lo * b.lo, a.hi * b.hi};
      });
    } else if (sup_skel >= g.h_inner) {
      // An existing skeleton point already witnesses the inner exceedance for
      // every proposal; only the outer constraint binds (common factors from
      // the other segments cancel from the acceptance ratio).
      accepted = bracket_coin(u, [&](double tol) {
        const ProbBracket a = piece_stays_below(left, g.h_outer, tol * 0.5);
        const ProbBracket b = piece_stays_below(right, g.h_outer, tol * 0.5);
        return ProbBracket{a.lo * b.lo, a.hi * b.hi};
      });
    } else {
      // P(sup in [h_inner, h_outer) | the split) = prod_outer - prod_inner.
      // When the proposed value itself exceeds h_inner the inner product is
      // exactly zero and the formula degenerates correctly, so the same
      // acceptance functional applies to every proposal.
      accepted = bracket_coin(u, [&](double tol) {
        const ProbBracket ro = product_below(others, g.h_outer, tol * 0.25);
        const ProbBracket ri = product_below(others, g.h_inner, tol * 0.25);
        const ProbBracket ao = piece_stays_below(left, g.h_outer, tol * 0.125);
        const ProbBracket bo = piece_stays_below(right, g.h_outer, tol * 0.125);
        const ProbBracket ai = piece_stays_below(left, g.h_inner, tol * 0.125);
        const ProbBracket bi = piece_stays_below(right, g.h_inner, tol * 0.125);
        return ProbBracket{std::max(0.0, ao.lo * bo.lo * ro.lo - ai.hi * bi.hi * ri.hi),
                           std::max(0.0, ao.hi * bo.hi * ro.hi - ai.lo * bi.lo * ri.lo)};
      });
    }
    if (accepted) {
      const double value = g.unshift(w);
      pts.emplace(t, value);
      return value;
    }
  }
  throw NumericError("fill_in: layered rejection loop exhausted");
}

}  // namespace

std::vector<std::pair<double, double>> fill_in(const Skeleton& skeleton, std::vector<double> times,
                                               RngStream& rng) {
  SkeletonBuilder sk;
  for (const auto& [t, v] : skeleton.points) sk.pts.emplace(t, v);
  sk.candidate = skeleton.candidate;
  sk.delta = skeleton.delta;
  if (skeleton.conditioning == Conditioning::Minimum) {
    sk.has_extremum = true;
    sk.extremum_value = skeleton.min_record.m;
    sk.extremum_is_max = false;
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(times.size());
  const double T = skeleton.T();
  for (const double t : times) {
    if (!(t >= 0.0) || !(t <= T)) throw std::domain_error("fill_in: time outside [0, T]");
    if (skeleton.conditioning == Conditioning::Layer) {
      out.emplace_back(t, layered_fill_point(skeleton, sk.pts, t, rng));
    } else {
      out.emplace_back(t, sk.insert(t, rng));
    }
  }
  return out;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string skeleton_to_json(const Skeleton& skeleton) {
  std::string s = "{\"t\":[";
  for (std::size_t i = 0; i < skeleton.points.size(); ++i) {
    if (i) s += ',';
    s += fmt17(skeleton.points[i].first);
  }
  s += "],\"y\":[";
  for (std::size_t i = 0; i < skeleton.points.size(); ++i) {
    if (i) s += ',';
    s += fmt17(skeleton.points[i].second);
  }
  s += "],\"conditioning\":";
  switch (skeleton.conditioning) {
    case Conditioning::None:
      s += "{\"type\":\"none\"}";
      break;
    case Conditioning::Minimum:
      s += "{\"type\":\"min\",\"m\":" + fmt17(skeleton.min_record.m) +
           ",\"tau\":" + fmt17(skeleton.min_record.tau) + "}";
      break;
    case Conditioning::Layer:
      s += "{\"type\":\"layer\",\"index\":" + std::to_string(skeleton.layer_index) +
           ",\"extremum\":" + fmt17(skeleton.extremum.value) + ",\"tau\":" + fmt17(skeleton.extremum.tau) +
           ",\"branch\":\"" + (skeleton.extremum.is_max ? "max" : "min") + "\"}";
      break;
  }
  s += ",\"attempts\":" + std::to_string(skeleton.attempts_used);
  s += ",\"kind\":\"";
  if (skeleton.candidate == CandidateKind::Bessel) {
    s += "bessel\",\"delta\":" + fmt17(skeleton.delta);
  } else {
    s += "brownian\"";
  }
  s += "}";
  return s;
}

}  // namespace exactdiff
