#include "roughlv/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace roughlv {

SkewRatioPoint skew_ratio_point(const SkewEstimate& skew_bs, const SkewEstimate& skew_loc,
                                double H) {
  SkewRatioPoint p;
  p.t = skew_bs.t;
  p.skew_bs = skew_bs.value;
  p.skew_loc = skew_loc.value;
  p.target = skew_ratio_target(H);
  p.defined = std::abs(skew_loc.value) > skew_loc.ci;
  if (!p.defined) {
    p.ratio = std::numeric_limits<double>::quiet_NaN();
    p.ci = std::numeric_limits<double>::quiet_NaN();
    return p;
  }
  p.ratio = skew_bs.value / skew_loc.value;
  const double rel_bs = skew_bs.value == 0.0 ? 0.0 : skew_bs.ci / skew_bs.value;
  const double rel_loc = skew_loc.ci / skew_loc.value;
  p.ci = std::abs(p.ratio) * std::hypot(rel_bs, rel_loc);
  if (skew_bs.value == 0.0) p.ci = skew_bs.ci / std::abs(skew_loc.value);
  return p;
}

std::vector<SkewRatioPoint> skew_ratio_curve(std::span<const PathBatch* const> batches) {
  std::vector<SkewRatioPoint> out;
  out.reserve(batches.size());
  for (const PathBatch* b : batches)
    out.push_back(skew_ratio_point(implied_skew(*b, 0.0), local_skew(*b, 0.0), b->params.hurst));
  return out;
}

double harmonic_mean(const std::function<double(double)>& sigma_loc, double k, int nodes) {
  if (nodes < 1) throw std::invalid_argument("harmonic_mean: need at least one interval");
  auto recip = [&](double y) {
    const double s = sigma_loc(y);
    if (!(s > 0.0)) throw DomainError("harmonic_mean: local volatility must be positive");
    return 1.0 / s;
  };
  if (k == 0.0) return 1.0 / recip(0.0);
  const double h = k / nodes;
  double sum = 0.5 * (recip(0.0) + recip(k));
  for (int j = 1; j < nodes; ++j) sum += recip(j * h);
  return k / (h * sum);
}

double harmonic_mean(std::span<const double> y_nodes, std::span<const double> sigma_nodes, double k) {
  if (y_nodes.size() != sigma_nodes.size() || y_nodes.empty())
    throw std::invalid_argument("harmonic_mean: node and value arrays must match");
  for (double s : sigma_nodes)
    if (!(s > 0.0)) throw DomainError("harmonic_mean: local volatility must be positive");
  if (!std::is_sorted(y_nodes.begin(), y_nodes.end()))
    throw std::invalid_argument("harmonic_mean: nodes must be sorted");
  const double lo = std::min(0.0, k);
  const double hi = std::max(0.0, k);
  if (lo < y_nodes.front() || hi > y_nodes.back())
    throw std::out_of_range("harmonic_mean: nodes do not cover [0, k]");

  auto recip_at = [&](double y) {
    auto it = std::upper_bound(y_nodes.begin(), y_nodes.end(), y);
    if (it == y_nodes.end()) return 1.0 / sigma_nodes.back();
    if (it == y_nodes.begin()) return 1.0 / sigma_nodes.front();
    const auto j = static_cast<std::size_t>(it - y_nodes.begin());
    const double w = (y - y_nodes[j - 1]) / (y_nodes[j] - y_nodes[j - 1]);
    return (1.0 - w) / sigma_nodes[j - 1] + w / sigma_nodes[j];
  };
  if (k == 0.0) return 1.0 / recip_at(0.0);

  std::vector<double> pts{lo, hi};
  for (double y : y_nodes)
    if (y > lo && y < hi) pts.push_back(y);
  std::sort(pts.begin(), pts.end());
  double integral = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    integral += 0.5 * (pts[i] - pts[i - 1]) * (recip_at(pts[i]) + recip_at(pts[i - 1]));
  return std::abs(k) / integral;
}

HarmonicPoint harmonic_point(const PathBatch& batch, double k, int nodes) {
  HarmonicPoint p;
  p.t = batch.maturity();
  p.k = k;
  const auto iv = implied_vol_mc(batch, k);
  p.sigma_bs = iv.sigma_bs;
  p.sigma_bs_ci = iv.ci;
  if (k == 0.0) {
    const auto lv = local_vol_ratio(batch, 0.0);
    p.harmonic = lv.sigma_loc;
    p.harmonic_ci = lv.ci;
  } else {
    const double h = k / nodes;
    double sum = 0.0;
    double ci_sum = 0.0;
    for (int j = 0; j <= nodes; ++j) {
      const double w = (j == 0 || j == nodes) ? 0.5 : 1.0;
      const auto lv = local_vol_ratio(batch, j * h);
      sum += w / lv.sigma_loc;
      ci_sum += w * lv.ci / (lv.sigma_loc * lv.sigma_loc);
    }
    p.harmonic = 1.0 / (sum / nodes);
    // node errors treated as fully correlated
    p.harmonic_ci = p.harmonic * p.harmonic * ci_sum / nodes;
  }
  p.ratio = p.sigma_bs / p.harmonic;
  p.ci = p.ratio * std::hypot(p.sigma_bs_ci / p.sigma_bs, p.harmonic_ci / p.harmonic);
  return p;
}

std::vector<HarmonicPoint> harmonic_failure_report(std::span<const PathBatch* const> batches,
                                                   std::span<const double> strikes, int nodes) {
  std::vector<HarmonicPoint> out;
  for (const PathBatch* b : batches)
    for (double k : strikes) out.push_back(harmonic_point(*b, k, nodes));
  return out;
}

DupirePoint dupire_check(const std::function<double(double, double)>& sigma_bs, double t, double k,
                         const DupireSteps& steps) {
  if (!(t > 0.0)) throw std::invalid_argument("dupire_check: t must be positive");
  const double dt = t * steps.dt_fraction;
  const double dk = steps.dk;
  const double s = sigma_bs(t, k);
  const double s_tp = sigma_bs(t + dt, k);
  const double s_tm = sigma_bs(t - dt, k);
  const double s_kp = sigma_bs(t, k + dk);
  const double s_km = sigma_bs(t, k - dk);
  const double ds_dt = (s_tp - s_tm) / (2.0 * dt);
  const double ds_dk = (s_kp - s_km) / (2.0 * dk);
  const double d2s_dk2 = (s_kp - 2.0 * s + s_km) / (dk * dk);

  const double num = s + 2.0 * t * ds_dt;
  const double moneyness = 1.0 - k * ds_dk / s;
  const double den = t * d2s_dk2 - 0.25 * t * t * s * ds_dk * ds_dk + moneyness * moneyness / s;
  DupirePoint p;
  if (!(num > 0.0) || !(den > 0.0)) {
    p.flagged = true;
    p.sigma_loc = std::numeric_limits<double>::quiet_NaN();
    return p;
  }
  p.sigma_loc = std::sqrt(num / den);
  return p;
}

std::optional<double> ldp_diagnostic(const PathBatch& batch, double y) {
  const double t = batch.maturity();
  const double H = batch.params.hurst;
  const double threshold = y * std::pow(t, 0.5 - H);
  std::size_t hits = 0;
  for (const auto& s : batch.samples)
    if (y >= 0.0 ? s.x_T >= threshold : s.x_T <= threshold) ++hits;
  if (hits == 0) return std::nullopt;
  const double prob = static_cast<double>(hits) / static_cast<double>(batch.size());
  return -std::pow(t, 2.0 * H) * std::log(prob);
}

double extrapolate_local_vol(std::span<const RateSolution> smile, double H, double T, double k) {
  if (smile.empty()) throw std::invalid_argument("extrapolate_local_vol: empty limiting smile");
  if (!(T > 0.0)) throw std::invalid_argument("extrapolate_local_vol: T must be positive");
  const double y = k / std::pow(T, 0.5 - H);
  if (y < smile.front().y || y > smile.back().y)
    throw std::out_of_range("extrapolate_local_vol: rescaled strike outside the computed grid");
  auto it = std::lower_bound(smile.begin(), smile.end(), y,
                             [](const RateSolution& s, double v) { return s.y < v; });
  if (it->y == y) return it->sigma_limit;
  const auto& right = *it;
  const auto& left = *(it - 1);
  const double w = (y - left.y) / (right.y - left.y);
  return (1.0 - w) * left.sigma_limit + w * right.sigma_limit;
}

}  // namespace roughlv
