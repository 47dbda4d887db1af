#include "roughlv/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <utility>

namespace roughlv {

GaussLegendreRule::GaussLegendreRule(int order) {
  if (order < 1) throw std::invalid_argument("Gauss-Legendre order must be >= 1");
  const auto n = static_cast<std::size_t>(order);
  nodes.resize(n);
  weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guess; nodes are
  // symmetric so only half are computed.
  auto legendre = [order](double x) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double deriv = order * (x * p1 - p0) / (x * x - 1.0);
    return std::pair{p1, deriv};
  };
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

double GaussLegendreRule::integrate(const std::function<double(double)>& f, double a,
                                    double b) const {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(mid + half * nodes[i]);
  return half * sum;
}

namespace {

const GaussLegendreRule& adaptive_rule() {
  static const GaussLegendreRule rule(10);
  return rule;
}

constexpr std::size_t kMaxPanels = 1 << 16;

struct Panel {
  double a, b;
  double left, right;  ///< half-panel estimates
  double error;        ///< |left + right - one-panel estimate|
  int depth;
};

Panel make_panel(const std::function<double(double)>& f, double a, double b, double whole,
                 int depth) {
  const double mid = 0.5 * (a + b);
  const auto& rule = adaptive_rule();
  const double left = rule.integrate(f, a, mid);
  const double right = rule.integrate(f, mid, b);
  double error = std::abs(left + right - whole);
  // differences at round-off level carry no information
  if (error <= 64.0 * std::numeric_limits<double>::epsilon() * std::abs(left + right)) error = 0.0;
  return {a, b, left, right, error, depth};
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth) {
  if (a == b) return 0.0;
  // Global scheme: always bisect the panel with the largest error estimate.
  auto worse = [](const Panel& x, const Panel& y) { return x.error < y.error; };
  std::priority_queue<Panel, std::vector<Panel>, decltype(worse)> heap(worse);
  heap.push(make_panel(f, a, b, adaptive_rule().integrate(f, a, b), 0));
  double error = heap.top().error;
  while (error > abs_tol) {
    const Panel p = heap.top();
    if (p.depth >= max_depth || heap.size() >= kMaxPanels) {
      throw QuadratureError("adaptive quadrature did not converge on [" + std::to_string(p.a) +
                            ", " + std::to_string(p.b) + "]");
    }
    heap.pop();
    const double mid = 0.5 * (p.a + p.b);
    const Panel left = make_panel(f, p.a, mid, p.left, p.depth + 1);
    const Panel right = make_panel(f, mid, p.b, p.right, p.depth + 1);
    heap.push(left);
    heap.push(right);
    error = std::max(0.0, error - p.error + left.error + right.error);
  }
  double total = 0.0;
  while (!heap.empty()) {
    total += heap.top().left + heap.top().right;
    heap.pop();
  }
  return total;
}

CompositeRule composite_unit_rule(int total_nodes, int per_panel, double grading) {
  if (per_panel < 1 || total_nodes < per_panel || total_nodes % per_panel != 0) {
    throw std::invalid_argument("composite rule: total_nodes must be a positive multiple of per_panel");
  }
  const int panels = total_nodes / per_panel;
  const GaussLegendreRule rule(per_panel);
  CompositeRule out;
  out.nodes.reserve(static_cast<std::size_t>(total_nodes));
  out.weights.reserve(static_cast<std::size_t>(total_nodes));
  for (int p = 0; p < panels; ++p) {
    const double a = std::pow(static_cast<double>(p) / panels, grading);
    const double b = std::pow(static_cast<double>(p + 1) / panels, grading);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      out.nodes.push_back(mid + half * rule.nodes[i]);
      out.weights.push_back(half * rule.weights[i]);
    }
  }
  return out;
}

}  // namespace roughlv
