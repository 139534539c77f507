#pragma once

#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace exactdiff {

/// Adaptive Simpson integration of f on [a,b] to relative tolerance rel_tol
/// (with abs_tol as a floor for integrals near zero).
/// Throws NumericError if the recursion cannot reach the tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-12, double abs_tol = 0.0, int max_depth = 60);

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Piecewise-monotone tabulated CDF built from an unnormalized density by
/// adaptive refinement; inverts to `cdf_tol` accuracy. Nodes cluster wherever
/// the density needs them, including integrable peaks at the interval ends.
class TabulatedInverseCdf {
 public:
  /// density: unnormalized, nonnegative on (a,b); may be +inf-peaked only in
  /// an integrable way strictly inside machine range.
  TabulatedInverseCdf(const std::function<double(double)>& density, double a, double b,
                      double cdf_tol = 1e-10);

  /// Same, but refinement starts from the given sorted node list. Callers
  /// with sharply localized mass should cluster nodes around it; the
  /// adaptive splitting only subdivides panels, it never discovers mass that
  /// all three probe points of a panel miss.
  TabulatedInverseCdf(const std::function<double(double)>& density, std::vector<double> initial_nodes,
                      double cdf_tol = 1e-10);

  /// Maps u in (0,1) through the inverse CDF.
  double invert(double u) const;

  double total_mass() const { return total_; }

 private:
  std::vector<double> x_;    // nodes
  std::vector<double> cdf_;  // normalized CDF at nodes
  std::vector<double> pdf_;  // normalized density at nodes
  double total_ = 0.0;
};

}  // namespace exactdiff
