#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace roughlv {

/// Thrown when adaptive quadrature cannot reach the requested tolerance.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gauss–Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendreRule(int order);

  /// Fixed-order rule mapped onto [a, b].
  double integrate(const std::function<double(double)>& f, double a, double b) const;
};

/// Globally adaptive bisection on top of a fixed-order Gauss–Legendre rule.
/// The panel with the largest |one-panel - two-half-panel| difference is split
/// until the summed differences fall below `abs_tol`.  Throws QuadratureError
/// when a panel would exceed `max_depth` bisections.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol = 1e-12, int max_depth = 60);

/// Nodes/weights of a composite rule on [0, 1] with panels graded towards 0
/// (breakpoints (j/P)^grading), so that t^{alpha} behaviour at the origin is
/// integrated accurately.
struct CompositeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

CompositeRule composite_unit_rule(int total_nodes, int per_panel = 16, double grading = 3.0);

}  // namespace roughlv
