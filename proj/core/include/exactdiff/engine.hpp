#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "exactdiff/brownian.hpp"
#include "exactdiff/layers.hpp"
#include "exactdiff/model.hpp"
#include "exactdiff/quadrature.hpp"
#include "exactdiff/rng.hpp"

namespace exactdiff {

enum class Conditioning { None, Minimum, Layer };

/// Finite set of exactly-distributed path points plus whatever conditioning
/// information later fill-in needs.
struct Skeleton {
  std::vector<std::pair<double, double>> points;  // time-sorted, includes (0,y) and (T, Y_T)
  CandidateKind candidate = CandidateKind::Brownian;
  double delta = 0.0;
  Conditioning conditioning = Conditioning::None;
  MinRecord min_record{0.0, 0.0};     // Minimum conditioning
  ExtremumRecord extremum{};          // Layer conditioning: branch extremum
  int layer_index = 0;                // Layer conditioning
  SupZone layer_zone = SupZone::BelowInner;
  LayerSpec layers;                   // Layer conditioning
  std::uint64_t attempts_used = 0;

  double T() const { return points.back().first; }
  double y0() const { return points.front().second; }
  double yT() const { return points.back().second; }
};

/// Per-path cost accounting. poisson_points charges the full mark count of
/// every candidate (the realization of Phi exists once its count is drawn,
/// whether or not the short-circuit materializes every coordinate);
/// logical_draws charges 2|Phi|+1 for the marks stage plus every named
/// variate actually consumed elsewhere.
struct RunCounters {
  std::uint64_t attempts = 0;
  std::uint64_t poisson_points = 0;
  std::uint64_t skeleton_points = 0;
  std::uint64_t logical_draws = 0;
  std::uint64_t raw_uniforms = 0;

  RunCounters& operator+=(const RunCounters& o) {
    attempts += o.attempts;
    poisson_points += o.poisson_points;
    skeleton_points += o.skeleton_points;
    logical_draws += o.logical_draws;
    raw_uniforms += o.raw_uniforms;
    return *this;
  }
};

struct ResourceCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EngineOptions {
  std::optional<double> fixed_endpoint;  // bridge mode: Y_T ~ delta_z
  bool positive_min = false;             // EA2: condition the bridge minimum above the lower boundary
  std::uint64_t max_logical_per_path = 200000000ULL;
  std::uint64_t max_attempts_per_path = 100000000ULL;
  std::optional<LayerSpec> layers;       // EA3 override; defaults to make_default_layers
};

/// Inverse-CDF sampler for the biased endpoint law: density proportional to
/// exp(-(u-y)^2/(2T) + A(u)) for Brownian candidates, p^delta_T(y,u) e^{A~(u)}
/// for Bessel candidates. Construction detects non-integrable biases.
class EndpointSampler {
 public:
  EndpointSampler(const UnitDiffusionSpec& spec, double y, double T);
  double sample(RngStream& rng) const;  // one logical draw

  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }

 private:
  std::shared_ptr<const TabulatedInverseCdf> table_;
  double lo_, hi_;
};

/// One configured exact-sampling problem; builds the endpoint table once and
/// reuses it across runs. Thread-safe for concurrent run() calls with
/// distinct rng streams.
class ExactSampler {
 public:
  enum class Algorithm { EA1, EA2, BesselEA1, EA3 };

  ExactSampler(Algorithm alg, UnitDiffusionSpec spec, double y, double T, EngineOptions options = {});

  Skeleton run(RngStream& rng, RunCounters* counters = nullptr) const;

  const UnitDiffusionSpec& spec() const { return spec_; }
  Algorithm algorithm() const { return alg_; }

 private:
  Algorithm alg_;
  UnitDiffusionSpec spec_;
  double y_, T_;
  EngineOptions opt_;
  std::shared_ptr<const EndpointSampler> endpoint_;
  LayerSpec default_layers_;

  Skeleton run_ea1_impl(RngStream& rng, RunCounters& rc) const;
  Skeleton run_ea2_impl(RngStream& rng, RunCounters& rc) const;
  Skeleton run_bessel_ea1_impl(RngStream& rng, RunCounters& rc) const;
  Skeleton run_ea3_impl(RngStream& rng, RunCounters& rc) const;
  double draw_endpoint(RngStream& rng) const;
};

/// Convenience one-shot drivers matching the four exact algorithms.
Skeleton run_ea1(const UnitDiffusionSpec& spec, double y, double T, RngStream& rng,
                 const EngineOptions& options = {}, RunCounters* counters = nullptr);
Skeleton run_ea2(const UnitDiffusionSpec& spec, double y, double T, RngStream& rng,
                 const EngineOptions& options = {}, RunCounters* counters = nullptr);
Skeleton run_bessel_ea1(const UnitDiffusionSpec& spec, double y, double T, RngStream& rng,
                        const EngineOptions& options = {}, RunCounters* counters = nullptr);
Skeleton run_ea3_two_boundary(const UnitDiffusionSpec& spec, double y, double T, RngStream& rng,
                              const EngineOptions& options = {}, RunCounters* counters = nullptr);

/// Conditional simulation of extra path points given an accepted skeleton,
/// from candidate-bridge laws alone. Requested times inside [0, T]; times
/// matching existing skeleton points return the stored values.
std::vector<std::pair<double, double>> fill_in(const Skeleton& skeleton, std::vector<double> times,
                                               RngStream& rng);

/// JSON serialization with 17-significant-digit decimal floats.
std::string skeleton_to_json(const Skeleton& skeleton);

}  // namespace exactdiff
