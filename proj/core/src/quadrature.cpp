#include "exactdiff/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace exactdiff {

namespace {

struct SimpsonPanel {
  double a, b, fa, fm, fb, estimate;
};

double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); }

double adaptive_step(const std::function<double(double)>& f, const SimpsonPanel& p, double tol, int depth,
                     int max_depth) {
  const double m = 0.5 * (p.a + p.b);
  const double lm = 0.5 * (p.a + m);
  const double rm = 0.5 * (m + p.b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(p.fa, flm, p.fm, m - p.a);
  const double right = simpson(p.fm, frm, p.fb, p.b - m);
  const double whole = left + right;
  if (depth >= max_depth) {
    if (std::fabs(whole - p.estimate) > 64.0 * tol) {
      throw NumericError("adaptive_simpson: refinement limit reached before tolerance");
    }
    return whole + (whole - p.estimate) / 15.0;
  }
  if (std::fabs(whole - p.estimate) <= 15.0 * tol) {
    return whole + (whole - p.estimate) / 15.0;
  }
  return adaptive_step(f, {p.a, m, p.fa, flm, p.fm, left}, 0.5 * tol, depth + 1, max_depth) +
         adaptive_step(f, {m, p.b, p.fm, frm, p.fb, right}, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        double abs_tol, int max_depth) {
  if (!(b > a)) return 0.0;
  // Pre-split so narrow interior features cannot hide from the first probes.
  const int n0 = 32;
  double rough = 0.0;
  std::vector<SimpsonPanel> panels;
  panels.reserve(n0);
  double xa = a;
  double fxa = f(xa);
  for (int i = 1; i <= n0; ++i) {
    const double xb = a + (b - a) * static_cast<double>(i) / n0;
    const double fxb = f(xb);
    const double xm = 0.5 * (xa + xb);
    const double fxm = f(xm);
    const double est = simpson(fxa, fxm, fxb, xb - xa);
    panels.push_back({xa, xb, fxa, fxm, fxb, est});
    rough += est;
    xa = xb;
    fxa = fxb;
  }
  const double tol = std::max(abs_tol, std::fabs(rough) * rel_tol) + 1e-300;
  double total = 0.0;
  for (const auto& p : panels) total += adaptive_step(f, p, tol / n0, 0, max_depth);
  return total;
}

TabulatedInverseCdf::TabulatedInverseCdf(const std::function<double(double)>& density, double a, double b,
                                         double cdf_tol)
    : TabulatedInverseCdf(
          density,
          [&] {
            std::vector<double> nodes(257);
            for (int i = 0; i <= 256; ++i) nodes[i] = a + (b - a) * static_cast<double>(i) / 256.0;
            return nodes;
          }(),
          cdf_tol) {}

TabulatedInverseCdf::TabulatedInverseCdf(const std::function<double(double)>& density,
                                         std::vector<double> initial_nodes, double cdf_tol) {
  if (initial_nodes.size() < 2) throw std::domain_error("TabulatedInverseCdf: need at least 2 nodes");
  const double a = initial_nodes.front();
  const double b = initial_nodes.back();
  if (!(b > a)) throw std::domain_error("TabulatedInverseCdf: empty support");
  struct Panel {
    double a, b, fa, fm, fb, mass;
  };
  auto make_panel = [&](double pa, double pb, double fa, double fb) {
    const double m = 0.5 * (pa + pb);
    const double fm = density(m);
    return Panel{pa, pb, fa, fm, fb, (pb - pa) / 6.0 * (fa + 4.0 * fm + fb)};
  };
  std::vector<Panel> seeds;
  seeds.reserve(initial_nodes.size());
  double rough = 0.0;
  {
    double prev_x = a;
    double prev_f = density(a);
    for (std::size_t i = 1; i < initial_nodes.size(); ++i) {
      const double x = initial_nodes[i];
      if (!(x > prev_x)) continue;
      const double fx = density(x);
      seeds.push_back(make_panel(prev_x, x, prev_f, fx));
      rough += seeds.back().mass;
      prev_x = x;
      prev_f = fx;
    }
  }
  // Depth-first subdivision with the Richardson pair estimate: children are
  // evaluated once, and accepted whenever they agree with the parent. The
  // split threshold uses the rough mass estimate.
  const double threshold = 0.5 * cdf_tol * std::max(rough, 1e-300);
  std::vector<Panel> panels;
  panels.reserve(seeds.size() * 4);
  std::vector<Panel> stack;
  double total = 0.0;
  for (const auto& seed : seeds) {
    stack.push_back(seed);
    while (!stack.empty()) {
      const Panel p = stack.back();
      stack.pop_back();
      const double m = 0.5 * (p.a + p.b);
      const Panel left = make_panel(p.a, m, p.fa, p.fm);
      const Panel right = make_panel(m, p.b, p.fm, p.fb);
      const double err = std::fabs(left.mass + right.mass - p.mass) / 15.0;
      if (err > threshold && (p.b - p.a) > 1e-14 * (b - a) && panels.size() + stack.size() < 400000) {
        stack.push_back(right);
        stack.push_back(left);
      } else {
        panels.push_back(left);
        panels.push_back(right);
        total += left.mass + right.mass;
      }
    }
  }
  total_ = total;
  if (!(total_ > 0.0) || !std::isfinite(total_)) {
    throw NumericError("TabulatedInverseCdf: density mass is zero or non-finite");
  }
  x_.reserve(panels.size() + 1);
  cdf_.reserve(panels.size() + 1);
  pdf_.reserve(panels.size() + 1);
  x_.push_back(panels.front().a);
  cdf_.push_back(0.0);
  pdf_.push_back(panels.front().fa / total_);
  double acc = 0.0;
  for (const auto& p : panels) {
    acc += p.mass;
    x_.push_back(p.b);
    cdf_.push_back(std::min(acc / total_, 1.0));
    pdf_.push_back(p.fb / total_);
  }
  cdf_.back() = 1.0;
}

double TabulatedInverseCdf::invert(double u) const {
  u = std::min(std::max(u, 0.0), 1.0);
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  if (hi == 0) hi = 1;
  const std::size_t lo = hi - 1;
  const double c0 = cdf_[lo], c1 = cdf_[hi];
  if (c1 <= c0) return x_[hi];
  // Within the panel the density is close to linear: invert the quadratic
  // CDF segment, falling back to linear interpolation when degenerate.
  const double w = (u - c0) / (c1 - c0);
  const double p0 = pdf_[lo], p1 = pdf_[hi];
  const double dx = x_[hi] - x_[lo];
  const double denom = p0 + p1;
  if (denom <= 0.0) return x_[lo] + w * dx;
  // Linear density across the panel: solve c*s^2 + pa*s = w/2 for s in [0,1].
  const double pa = p0 / denom;
  const double c = 0.5 * (p1 - p0) / denom;
  const double target = 0.5 * w;
  double s;
  if (std::fabs(c) < 1e-12) {
    s = target / std::max(pa, 1e-300);
  } else {
    s = (-pa + std::sqrt(std::max(pa * pa + 4.0 * c * target, 0.0))) / (2.0 * c);
  }
  if (!(s >= 0.0 && s <= 1.0)) s = w;
  return x_[lo] + s * dx;
}

}  // namespace exactdiff
