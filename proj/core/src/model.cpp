#include "exactdiff/model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "exactdiff/bessel.hpp"
#include "exactdiff/quadrature.hpp"

namespace exactdiff {

namespace {

double central_difference(const std::function<double(double)>& f, double u) {
  const double h = std::max(1e-6, 1e-8 * std::fabs(u));
  return (f(u + h) - f(u - h)) / (2.0 * h);
}

// Golden-section polish of an extremum bracketed by three grid nodes.
template <typename F>
double refine_extremum(F f, double a, double b, bool maximize, int iters = 160) {
  const double gr = 0.6180339887498948482;
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters && (b - a) > 1e-15 * (std::fabs(a) + std::fabs(b) + 1.0); ++i) {
    const bool take_left = maximize ? (f1 > f2) : (f1 < f2);
    if (take_left) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    }
  }
  return maximize ? std::max(f1, f2) : std::min(f1, f2);
}

struct GridExtrema {
  double min;
  double max;
};

// Grid scan plus golden polish around the best nodes.
GridExtrema scan_extrema(const std::function<double(double)>& f, const std::vector<double>& nodes) {
  std::size_t imin = 0, imax = 0;
  std::vector<double> vals(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    vals[i] = f(nodes[i]);
    if (vals[i] < vals[imin]) imin = i;
    if (vals[i] > vals[imax]) imax = i;
  }
  auto polish = [&](std::size_t i, bool maximize) {
    const double a = nodes[i == 0 ? 0 : i - 1];
    const double b = nodes[std::min(i + 1, nodes.size() - 1)];
    if (!(b > a)) return vals[i];
    return refine_extremum(f, a, b, maximize);
  };
  GridExtrema e{std::min(vals[imin], polish(imin, false)), std::max(vals[imax], polish(imax, true))};
  return e;
}

std::vector<double> log_uniform_nodes(double lo, double mid, double hi, int n_log, int n_lin) {
  std::vector<double> nodes;
  nodes.reserve(n_log + n_lin + 2);
  for (int i = 0; i <= n_log; ++i) nodes.push_back(lo * std::pow(mid / lo, static_cast<double>(i) / n_log));
  for (int i = 1; i <= n_lin; ++i) nodes.push_back(mid + (hi - mid) * static_cast<double>(i) / n_lin);
  return nodes;
}

constexpr double kExtremaMargin = 1e-9;

}  // namespace

double UnitDiffusionSpec::drift_deriv(double u) const {
  if (drift_derivative) return drift_derivative(u);
  return central_difference(drift, u);
}

double UnitDiffusionSpec::phi(double u) const {
  if (!(u > lower_boundary) || !(u < upper_boundary)) {
    throw std::domain_error("phi: u must lie in the open interior of the state space");
  }
  double br;
  if (bracket) {
    br = bracket(u);
  } else {
    const double a = drift(u);
    br = a * a + drift_deriv(u);
    if (candidate == CandidateKind::Bessel) {
      const double beta = (delta - 1.0) / (2.0 * u);
      const double beta_prime = -(delta - 1.0) / (2.0 * u * u);
      br -= beta * beta + beta_prime;
    }
  }
  return 0.5 * br - phi_floor;
}

void UnitDiffusionSpec::validate() const {
  if (!drift) throw std::invalid_argument("UnitDiffusionSpec: drift is required");
  if (candidate == CandidateKind::Bessel) {
    if (!(delta >= 2.0)) throw std::invalid_argument("UnitDiffusionSpec: Bessel candidate needs delta >= 2");
    if (lower_boundary != 0.0) {
      throw std::invalid_argument("UnitDiffusionSpec: Bessel candidate assumes a lower boundary at 0");
    }
  }
}

double lamperti_transform(const std::function<double(double)>& sigma, double xi, double x) {
  auto integrand = [&](double u) {
    const double s = sigma(u);
    if (!(s > 0.0)) throw std::domain_error("lamperti_transform: sigma must be positive on the range");
    return 1.0 / s;
  };
  if (x == xi) return 0.0;
  const double lo = std::min(xi, x), hi = std::max(xi, x);
  const double v = adaptive_simpson(integrand, lo, hi, 1e-10);
  return x >= xi ? v : -v;
}

double conditioned_drift(const std::function<double(double)>& base_drift,
                         const std::function<double(double)>& minus_two_A, double u) {
  if (!(u > 0.0)) throw std::domain_error("conditioned_drift: u must be > 0");
  auto sprime = [&](double z) { return std::exp(minus_two_A(z)); };
  // S(u) - S(0) must converge at 0; probe with a shrinking head piece.
  double eps = u * 1e-3;
  double integral = adaptive_simpson(sprime, eps, u, 1e-11);
  double prev_piece = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 5; ++k) {
    const double next_eps = eps * 1e-3;
    const double piece = adaptive_simpson(sprime, next_eps, eps, 1e-9);
    if (k > 0 && piece > 0.9 * prev_piece && piece > 1e-12 * integral) {
      throw std::domain_error("conditioned_drift: scale integral diverges at 0 (conditioning degenerate)");
    }
    integral += piece;
    prev_piece = piece;
    eps = next_eps;
    if (piece < 1e-14 * integral) break;
  }
  return base_drift(u) + sprime(u) / integral;
}

double wide_sense_bessel_drift(double nu, double rho, double x) {
  if (!(x > 0.0)) throw std::domain_error("wide_sense_bessel_drift: x must be > 0");
  if (rho < 0.0 || nu < -1.0) throw std::domain_error("wide_sense_bessel_drift: need rho >= 0, nu >= -1");
  const double base = (2.0 * nu + 1.0) / (2.0 * x);
  if (rho == 0.0) return base;
  const double ratio = bessel_i_scaled(nu + 1.0, rho * x) / bessel_i_scaled(nu, rho * x);
  return base + rho * ratio;
}

GrowthModelParams::GrowthModelParams(double kappa_, double omega_, double tau_)
    : kappa(kappa_), omega(omega_), tau(tau_) {
  if (!(kappa > 0.0)) throw std::invalid_argument("GrowthModelParams: kappa must be > 0");
  if (!(omega > 0.0)) throw std::invalid_argument("GrowthModelParams: omega must be > 0");
  if (tau < 0.0) throw std::invalid_argument("GrowthModelParams: tau must be >= 0");
  if (!(tau + omega > 0.0)) throw std::invalid_argument("GrowthModelParams: tau + omega must be > 0");
  if (omega == 2.0 * kappa) throw std::invalid_argument("GrowthModelParams: omega == 2*kappa not supported");
}

double growth_lamperti(const GrowthModelParams& p, double x) {
  if (!(x >= 0.0)) throw std::domain_error("growth_lamperti: x must be >= 0");
  // int_0^x du / sqrt(tau u + omega u^2) = (2/sqrt(omega)) ln(sqrt(omega x) + sqrt(tau + omega x)),
  // which equals ln(tau)/sqrt(omega) at x = 0.
  const double sw = std::sqrt(p.omega);
  return (2.0 / sw) * std::log(std::sqrt(p.omega * x) + std::sqrt(p.tau + p.omega * x));
}

namespace {

// 1 - cosh(x)^c, evaluated without cancellation for small x and without
// overflow for large c*log(cosh x). Returns through log-magnitude when the
// direct value would overflow; `big` is set in that case.
struct PowGap {
  double value;     // 1 - cosh^c, valid when !big
  double log_mag;   // log|1 - cosh^c|, always valid
  bool negative;    // sign of (1 - cosh^c)
  bool big;
};

PowGap one_minus_cosh_pow(double x, double c) {
  const double sh = std::sinh(0.5 * x);
  const double w = c * std::log1p(2.0 * sh * sh);  // c * log cosh(x)
  PowGap g{};
  if (w > 700.0) {
    g.big = true;
    g.negative = true;
    g.log_mag = w;
    g.value = -std::numeric_limits<double>::infinity();
    return g;
  }
  const double v = -std::expm1(w);
  g.value = v;
  g.negative = v < 0.0;
  g.log_mag = std::log(std::fabs(v));
  g.big = false;
  return g;
}

}  // namespace

double growth_drift(const GrowthModelParams& p, double z) {
  if (!(z > 0.0)) throw std::domain_error("growth_drift: z must be > 0");
  const double sw = std::sqrt(p.omega);
  const double x = 0.5 * sw * z;
  const double c = 4.0 * p.kappa / p.omega - 2.0;
  const double th = std::tanh(x);
  const double first = (p.kappa / sw) * th;
  const double second = -(0.5 * sw) * (std::cosh(2.0 * x) / std::sinh(2.0 * x));
  const PowGap D = one_minus_cosh_pow(x, c);
  double third;
  if (D.big) {
    third = -((p.omega - 2.0 * p.kappa) / sw) * th * std::exp(-D.log_mag);
  } else {
    third = ((p.omega - 2.0 * p.kappa) / sw) * th / D.value;
  }
  return first + second + third;
}

double growth_drift_derivative(const GrowthModelParams& p, double z) {
  if (!(z > 0.0)) throw std::domain_error("growth_drift_derivative: z must be > 0");
  const double sw = std::sqrt(p.omega);
  const double x = 0.5 * sw * z;
  const double c = 4.0 * p.kappa / p.omega - 2.0;
  const double ch = std::cosh(x);
  const double sh = std::sinh(x);
  const double sech2 = 1.0 / (ch * ch);
  const double s2 = std::sinh(2.0 * x);
  double tail;
  const PowGap D = one_minus_cosh_pow(x, c);
  if (D.big) {
    // sech^2/D -> -sech^2 e^{-w}; c sinh^2 cosh^{c-2} / D^2 -> c sinh^2 cosh^{-2} e^{-w}
    const double ew = std::exp(-D.log_mag);
    tail = (-sech2 + c * sh * sh / (ch * ch)) * ew;
  } else {
    const double coshpow = std::exp((c - 2.0) * std::log(ch));
    tail = sech2 / D.value + c * sh * sh * coshpow / (D.value * D.value);
  }
  return 0.5 * p.kappa * sech2 + p.omega / (2.0 * s2 * s2) + 0.5 * (p.omega - 2.0 * p.kappa) * tail;
}

double growth_log_bias_brownian(const GrowthModelParams& p, double z) {
  if (!(z > 0.0)) throw std::domain_error("growth_log_bias_brownian: z must be > 0");
  const double sw = std::sqrt(p.omega);
  const double x = 0.5 * sw * z;
  const double c = 4.0 * p.kappa / p.omega - 2.0;
  const double shh = std::sinh(0.5 * x);
  const double log_cosh = std::log1p(2.0 * shh * shh);
  const double log_sinh_2x = std::log(std::sinh(2.0 * x));
  const PowGap D = one_minus_cosh_pow(x, c);
  return (2.0 * p.kappa / p.omega) * log_cosh - 0.5 * log_sinh_2x +
         (2.0 * (p.omega - 2.0 * p.kappa) / p.omega) * (log_cosh - D.log_mag / c);
}

std::pair<double, double> growth_phi_bounds(const GrowthModelParams& p) {
  const double q = (p.omega - 2.0 * p.kappa) * (p.omega - 2.0 * p.kappa) / (4.0 * p.omega);
  return {-p.kappa, q + 2.0 * p.kappa};
}

namespace {

// Cancellation-free form of the growth-model bracket
// [alpha^2 - beta^2 + alpha' - beta'](z) with beta the Bessel(4) drift:
//   Q + f(z) + (2k - 2k^2/w) / (cosh(sw z) + 1),
//   f(z) = (3/4) [w / sinh^2(sw z) - 1/z^2],
// where Q = (w-2k)^2/(4w). f is evaluated by series below s = sw*z = 0.02.
double growth_bessel_bracket(const GrowthModelParams& p, double z) {
  const double sw = std::sqrt(p.omega);
  const double s = sw * z;
  const double q = (p.omega - 2.0 * p.kappa) * (p.omega - 2.0 * p.kappa) / (4.0 * p.omega);
  double f;
  if (s < 0.02) {
    f = -(p.omega / 4.0) * (1.0 - s * s / 5.0 + s * s * s * s * 2.0 / 105.0);
  } else {
    const double sh = std::sinh(s);
    f = 0.75 * (p.omega / (sh * sh) - 1.0 / (z * z));
  }
  const double mix = (2.0 * p.kappa - 2.0 * p.kappa * p.kappa / p.omega) / (std::cosh(s) + 1.0);
  return q + f + mix;
}

// Brownian-case bracket [alpha^2 + alpha'](z) = bessel bracket + 3/(4 z^2);
// equivalently Q + (3w/4)/sinh^2(sw z) + (2k - 2k^2/w)/(cosh(sw z)+1),
// which has no cancelling pieces at all.
double growth_brownian_bracket(const GrowthModelParams& p, double z) {
  const double sw = std::sqrt(p.omega);
  const double s = sw * z;
  const double q = (p.omega - 2.0 * p.kappa) * (p.omega - 2.0 * p.kappa) / (4.0 * p.omega);
  const double sh = std::sinh(s);
  const double mix = (2.0 * p.kappa - 2.0 * p.kappa * p.kappa / p.omega) / (std::cosh(s) + 1.0);
  return q + 0.75 * p.omega / (sh * sh) + mix;
}

}  // namespace

UnitDiffusionSpec make_growth_bessel_spec(const GrowthModelParams& p, double delta,
                                          const GrowthSpecOptions& opt) {
  if (delta != 4.0 && !(delta >= 2.0)) throw std::invalid_argument("make_growth_bessel_spec: delta >= 2");
  UnitDiffusionSpec spec;
  spec.name = "growth-bessel";
  spec.drift = [p](double z) { return growth_drift(p, z); };
  spec.drift_derivative = [p](double z) { return growth_drift_derivative(p, z); };
  const double half_log = 0.5 * (delta - 1.0);
  spec.log_bias = [p, half_log](double z) {
    return growth_log_bias_brownian(p, z) - half_log * std::log(z);
  };
  spec.lower_boundary = 0.0;
  spec.candidate = CandidateKind::Bessel;
  spec.delta = delta;
  if (delta == 4.0) {
    spec.bracket = [p](double z) { return growth_bessel_bracket(p, z); };
  }
  auto br = [&spec](double z) {
    const double a = spec.drift(z);
    double b = a * a + spec.drift_derivative(z);
    const double bd = (spec.delta - 1.0) / (2.0 * z);
    return b - bd * bd + (spec.delta - 1.0) / (2.0 * z * z);
  };
  std::function<double(double)> bracket_fn =
      spec.bracket ? spec.bracket : std::function<double(double)>(br);
  // The bracket tends to 0 at the boundary (that is the point of delta = 4)
  // and to Q at infinity; scan plus polish recovers interior extrema.
  const auto nodes = log_uniform_nodes(1e-7, 1.0, 80.0, 400, 800);
  GridExtrema e = scan_extrema(bracket_fn, nodes);
  const double q = (p.omega - 2.0 * p.kappa) * (p.omega - 2.0 * p.kappa) / (4.0 * p.omega);
  if (delta == 4.0) {
    e.min = std::min(e.min, std::min(0.0, q));
    e.max = std::max(e.max, std::max(0.0, q));
  }
  spec.phi_floor = opt.phi_floor ? *opt.phi_floor : 0.5 * (e.min - kExtremaMargin);
  spec.rate_bound = opt.rate_bound ? *opt.rate_bound : 0.5 * (e.max + kExtremaMargin) - spec.phi_floor;
  return spec;
}

UnitDiffusionSpec make_growth_brownian_spec(const GrowthModelParams& p, const GrowthSpecOptions& opt) {
  UnitDiffusionSpec spec;
  spec.name = "growth-brownian";
  spec.drift = [p](double z) { return growth_drift(p, z); };
  spec.drift_derivative = [p](double z) { return growth_drift_derivative(p, z); };
  spec.log_bias = [p](double z) { return growth_log_bias_brownian(p, z); };
  spec.lower_boundary = 0.0;
  spec.candidate = CandidateKind::Brownian;
  spec.bracket = [p](double z) { return growth_brownian_bracket(p, z); };
  const double q = (p.omega - 2.0 * p.kappa) * (p.omega - 2.0 * p.kappa) / (4.0 * p.omega);
  const auto nodes = log_uniform_nodes(1e-6, 1.0, 80.0, 300, 600);
  GridExtrema e = scan_extrema(spec.bracket, nodes);
  e.min = std::min(e.min, q);  // bracket -> Q from above when the mix term is positive
  spec.phi_floor = opt.phi_floor ? *opt.phi_floor : 0.5 * (e.min - kExtremaMargin);
  spec.rate_bound =
      opt.rate_bound ? *opt.rate_bound : std::numeric_limits<double>::infinity();  // unbounded at 0

  // sup_{u >= m} phi for EA2. For kappa <= omega/2 every piece decreases in z,
  // so the band supremum is phi(m); otherwise use a reverse running max over
  // a dense grid, padded one grid cell to stay an upper bound.
  const bool monotone = 2.0 * p.kappa - 2.0 * p.kappa * p.kappa / p.omega >= 0.0;
  const double floor_used = spec.phi_floor;
  auto bracket_fn = spec.bracket;
  if (monotone) {
    spec.band_sup = [bracket_fn, floor_used](double m) {
      if (!(m > 0.0)) return std::numeric_limits<double>::infinity();
      return 0.5 * bracket_fn(m) - floor_used;
    };
  } else {
    auto env_nodes = std::make_shared<std::vector<double>>(log_uniform_nodes(1e-8, 1.0, 120.0, 700, 1400));
    auto env_vals = std::make_shared<std::vector<double>>(env_nodes->size());
    double running = std::max(q, bracket_fn(env_nodes->back()));
    for (std::size_t i = env_nodes->size(); i-- > 0;) {
      running = std::max(running, bracket_fn((*env_nodes)[i]));
      (*env_vals)[i] = running;
    }
    spec.band_sup = [bracket_fn, floor_used, env_nodes, env_vals](double m) {
      if (!(m > 0.0)) return std::numeric_limits<double>::infinity();
      auto it = std::upper_bound(env_nodes->begin(), env_nodes->end(), m);
      double sup;
      if (it == env_nodes->begin()) {
        sup = std::max(bracket_fn(m), (*env_vals)[0]);
      } else if (it == env_nodes->end()) {
        sup = bracket_fn(m);
      } else {
        const std::size_t idx = static_cast<std::size_t>(it - env_nodes->begin());
        sup = std::max(bracket_fn(m), (*env_vals)[idx == 0 ? 0 : idx - 1]);
      }
      return 0.5 * sup - floor_used;
    };
  }
  return spec;
}

UnitDiffusionSpec make_wide_sense_bessel_spec(double nu, double rho) {
  if (nu < -1.0 || rho < 0.0) throw std::invalid_argument("make_wide_sense_bessel_spec: nu >= -1, rho >= 0");
  UnitDiffusionSpec spec;
  spec.name = "wide-sense-bessel";
  spec.drift = [nu, rho](double x) { return wide_sense_bessel_drift(nu, rho, x); };
  spec.lower_boundary = 0.0;
  spec.candidate = CandidateKind::Bessel;
  spec.delta = 2.0 * nu + 2.0;
  if (rho == 0.0) {
    spec.bracket = [](double) { return 0.0; };
    spec.log_bias = [](double) { return 0.0; };
    spec.phi_floor = 0.0;
    spec.rate_bound = 0.0;
    return spec;
  }
  // alpha - beta = rho I_{nu+1}(rho x) / I_nu(rho x) =: rho R(x); the bracket
  // is rho R (2 beta + rho R) + (rho R)'.
  auto rhoR = [nu, rho](double x) {
    return rho * bessel_i_scaled(nu + 1.0, rho * x) / bessel_i_scaled(nu, rho * x);
  };
  const double delta = spec.delta;
  spec.bracket = [rhoR, delta](double x) {
    const double d = rhoR(x);
    const double beta = (delta - 1.0) / (2.0 * x);
    const double h = std::max(1e-6, 1e-8 * x);
    const double dprime = (rhoR(x + h) - rhoR(x - h)) / (2.0 * h);
    return d * (2.0 * beta + d) + dprime;
  };
  spec.log_bias = [nu, rho](double x) {
    return log_bessel_i_scaled(nu, rho * x) + rho * x - nu * std::log(x);
  };
  const auto nodes = log_uniform_nodes(1e-6, 1.0, 200.0 / std::max(rho, 0.05), 300, 900);
  const GridExtrema e = scan_extrema(spec.bracket, nodes);
  spec.phi_floor = 0.5 * (e.min - kExtremaMargin);
  spec.rate_bound = 0.5 * (e.max + kExtremaMargin) - spec.phi_floor;
  return spec;
}

UnitDiffusionSpec make_sine_drift_spec(double amplitude) {
  UnitDiffusionSpec spec;
  spec.name = "sine-drift";
  const double a = amplitude;
  spec.drift = [a](double u) { return a * std::sin(u); };
  spec.drift_derivative = [a](double u) { return a * std::cos(u); };
  spec.log_bias = [a](double u) { return -a * std::cos(u); };
  spec.bracket = [a](double u) {
    const double s = std::sin(u);
    return a * a * s * s + a * std::cos(u);
  };
  std::vector<double> nodes(721);
  for (int i = 0; i <= 720; ++i) nodes[i] = -3.2 + 6.6 * i / 720.0;
  const GridExtrema e = scan_extrema(spec.bracket, nodes);  // bracket is 2pi-periodic
  spec.phi_floor = 0.5 * (e.min - kExtremaMargin);
  spec.rate_bound = 0.5 * (e.max + kExtremaMargin) - spec.phi_floor;
  return spec;
}

UnitDiffusionSpec make_zero_drift_spec() {
  UnitDiffusionSpec spec;
  spec.name = "zero-drift";
  spec.drift = [](double) { return 0.0; };
  spec.drift_derivative = [](double) { return 0.0; };
  spec.log_bias = [](double) { return 0.0; };
  spec.bracket = [](double) { return 0.0; };
  spec.phi_floor = 0.0;
  spec.rate_bound = 0.0;
  return spec;
}

UnitDiffusionSpec make_two_boundary_toy_spec(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("make_two_boundary_toy_spec: c must be > 0");
  UnitDiffusionSpec spec;
  spec.name = "two-boundary-toy";
  spec.drift = [c](double u) { return c * (1.0 / u - 1.0 / (1.0 - u)); };
  spec.drift_derivative = [c](double u) { return c * (-1.0 / (u * u) - 1.0 / ((1.0 - u) * (1.0 - u))); };
  spec.log_bias = [c](double u) { return c * std::log(u * (1.0 - u)); };
  spec.lower_boundary = 0.0;
  spec.upper_boundary = 1.0;
  auto bracket = [c](double u) {
    const double d = c * (1.0 / u - 1.0 / (1.0 - u));
    return d * d + c * (-1.0 / (u * u) - 1.0 / ((1.0 - u) * (1.0 - u)));
  };
  spec.bracket = bracket;
  std::vector<double> nodes(2001);
  for (int i = 0; i <= 2000; ++i) nodes[i] = 1e-4 + (1.0 - 2e-4) * i / 2000.0;
  const GridExtrema e = scan_extrema(bracket, nodes);
  spec.phi_floor = 0.5 * (e.min - kExtremaMargin);
  spec.rate_bound = std::numeric_limits<double>::infinity();
  const double floor_used = spec.phi_floor;
  spec.interval_sup = [bracket, floor_used](double lo, double hi) {
    // The bracket is convex-ish with singular ends; endpoint values dominate,
    // but scan a clustered grid as well and keep the max.
    double sup = std::max(bracket(lo), bracket(hi));
    const int n = 160;
    for (int i = 1; i < n; ++i) {
      const double u = lo + (hi - lo) * i / static_cast<double>(n);
      sup = std::max(sup, bracket(u));
    }
    return 0.5 * sup * (1.0 + 1e-9) - floor_used + 1e-12;
  };
  return spec;
}

}  // namespace exactdiff
