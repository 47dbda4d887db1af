#include "roughlv/markov_projection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "roughlv/stats.hpp"

namespace roughlv {

std::string_view to_string(LocalVolMethod m) {
  return m == LocalVolMethod::Kernel ? "kernel" : "ratio";
}

double silverman_bandwidth(const PathBatch& batch) {
  const auto& s = batch.samples;
  if (s.size() < 2) throw std::invalid_argument("silverman_bandwidth: need at least two samples");
  const auto sum = summarize<1>(s.size(), [&](std::size_t m) { return std::array<double, 1>{s[m].x_T}; });
  const double sd = std::sqrt(sum.cov[0][0]);
  const double b = 1.06 * sd * std::pow(static_cast<double>(s.size()), -0.2);
  return 1.0 / (2.0 * b * b);
}

namespace {

// sigma = sqrt(A / B) and its 95% half-width from the joint moments of (A, B).
void ratio_sigma(const MomentSummary<2>& sum, double& sigma, double& ci) {
  const double a = sum.mean[0];
  const double b = sum.mean[1];
  sigma = std::sqrt(a / b);
  ci = sum.delta_ci({1.0 / (2.0 * sigma * b), -a / (2.0 * sigma * b * b)});
}

}  // namespace

LocalVolPoint local_vol_kernel(const PathBatch& batch, double k, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("local_vol_kernel: bandwidth must be positive");
  const auto& s = batch.samples;
  if (s.empty()) throw DegenerateSupportError("local_vol_kernel: empty batch");

  double min_sq = std::numeric_limits<double>::infinity();
  for (const auto& p : s) min_sq = std::min(min_sq, (p.x_T - k) * (p.x_T - k));
  if (-delta * min_sq < std::log(1e-300))
    throw DegenerateSupportError("local_vol_kernel: all kernel weights below 1e-300");

  // weights rescaled by the largest one; the ratio is unaffected
  std::vector<double> w(s.size());
  for (std::size_t m = 0; m < s.size(); ++m) {
    const double d = s[m].x_T - k;
    w[m] = std::exp(-delta * (d * d - min_sq));
  }
  const auto sum = summarize<2>(s.size(), [&](std::size_t m) {
    return std::array<double, 2>{s[m].v_T * w[m], w[m]};
  });

  LocalVolPoint p;
  p.t = batch.maturity();
  p.k = k;
  p.method = LocalVolMethod::Kernel;
  ratio_sigma(sum, p.sigma_loc, p.ci);

  std::sort(w.begin(), w.end(), std::greater<>());
  const double total = pairwise_sum(w);
  double acc = 0.0;
  std::size_t carriers = 0;
  for (double wi : w) {
    acc += wi;
    ++carriers;
    if (acc >= 0.99 * total) break;
  }
  p.reliable = carriers >= 50;
  return p;
}

LocalVolPoint local_vol_kernel(const PathBatch& batch, double k) {
  return local_vol_kernel(batch, k, silverman_bandwidth(batch));
}

double log_pi_weight(const PathSample& s, double k, double rho) {
  const double u = k + 0.5 * s.int_v - rho * s.int_sqrtv_dW;
  return -0.5 * std::log(s.int_v) - u * u / (2.0 * (1.0 - rho * rho) * s.int_v);
}

PiWeight pi_weight(const PathSample& s, double k, double rho) {
  PiWeight w;
  w.u = k + 0.5 * s.int_v - rho * s.int_sqrtv_dW;
  w.value = std::exp(log_pi_weight(s, k, rho));
  return w;
}

namespace {

// Pi weights divided by their maximum over the batch; every estimator below
// is a ratio of homogeneous means, so the common factor cancels.
std::vector<double> scaled_pi(const PathBatch& batch, double k) {
  const auto& s = batch.samples;
  const double rho = batch.params.rho;
  std::vector<double> lp(s.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < s.size(); ++m) {
    if (!(s[m].int_v > 0.0)) throw std::invalid_argument("Pi weight: int_v must be positive");
    lp[m] = log_pi_weight(s[m], k, rho);
    top = std::max(top, lp[m]);
  }
  for (auto& v : lp) v = std::exp(v - top);
  return lp;
}

}  // namespace

LocalVolPoint local_vol_ratio(const PathBatch& batch, double k) {
  const auto& s = batch.samples;
  if (s.empty()) throw std::invalid_argument("local_vol_ratio: empty batch");
  const auto pi = scaled_pi(batch, k);
  const auto sum = summarize<2>(s.size(), [&](std::size_t m) {
    return std::array<double, 2>{s[m].v_T * pi[m], pi[m]};
  });
  LocalVolPoint p;
  p.t = batch.maturity();
  p.k = k;
  p.method = LocalVolMethod::Ratio;
  ratio_sigma(sum, p.sigma_loc, p.ci);
  return p;
}

SkewEstimate local_skew(const PathBatch& batch, double k) {
  const auto& s = batch.samples;
  if (s.empty()) throw std::invalid_argument("local_skew: empty batch");
  const double rho = batch.params.rho;
  const double rho_bar2 = 1.0 - rho * rho;
  const auto pi = scaled_pi(batch, k);
  const auto sum = summarize<4>(s.size(), [&](std::size_t m) {
    const double u = k + 0.5 * s[m].int_v - rho * s[m].int_sqrtv_dW;
    const double u_over_i = u / s[m].int_v;
    return std::array<double, 4>{s[m].v_T * pi[m], u_over_i * pi[m],
                                 u_over_i * pi[m] * s[m].v_T, pi[m]};
  });
  const double a = sum.mean[0];  // E[V Pi]
  const double b = sum.mean[1];  // E[U Pi / I]
  const double c = sum.mean[2];  // E[U Pi V / I]
  const double d = sum.mean[3];  // E[Pi]
  if (s.size() > 1 && d < 10.0 * sum.standard_error(3))
    throw UnstableEstimateError("local_skew: E[Pi] is within 10 standard errors of zero");

  const double den = 2.0 * rho_bar2 * std::sqrt(a) * std::pow(d, 1.5);
  const double f = (a * b - c * d) / den;
  SkewEstimate out;
  out.t = batch.maturity();
  out.value = f;
  out.ci = sum.delta_ci({b / den - f / (2.0 * a), a / den, -d / den, -c / den - 1.5 * f / d});
  return out;
}

SkewEstimate fd_skew_loc(const PathBatch& batch, double y) {
  if (y == 0.0) throw std::invalid_argument("fd_skew_loc: y must be non-zero");
  const auto& s = batch.samples;
  const double t = batch.maturity();
  const double delta = std::abs(y) * std::pow(t, 0.5 - batch.params.hurst);
  const auto pp = scaled_pi(batch, delta);
  const auto pm = scaled_pi(batch, -delta);
  const auto sum = summarize<4>(s.size(), [&](std::size_t m) {
    return std::array<double, 4>{s[m].v_T * pp[m], pp[m], s[m].v_T * pm[m], pm[m]};
  });
  const double sp = std::sqrt(sum.mean[0] / sum.mean[1]);
  const double sm = std::sqrt(sum.mean[2] / sum.mean[3]);
  const double scale = 1.0 / (2.0 * delta);
  SkewEstimate out;
  out.t = t;
  out.value = (sp - sm) * scale;
  out.ci = sum.delta_ci({scale / (2.0 * sp * sum.mean[1]),
                         -scale * sum.mean[0] / (2.0 * sp * sum.mean[1] * sum.mean[1]),
                         -scale / (2.0 * sm * sum.mean[3]),
                         scale * sum.mean[2] / (2.0 * sm * sum.mean[3] * sum.mean[3])});
  return out;
}

}  // namespace roughlv
