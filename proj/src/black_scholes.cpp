#include "roughlv/black_scholes.hpp"

#include <cmath>
#include <numbers>

#include "roughlv/stats.hpp"

namespace roughlv {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double bs_d2(double k, double v) { return -k / v - 0.5 * v; }

double bs_call(double k, double v) {
  if (v <= 0.0) return std::max(1.0 - std::exp(k), 0.0);
  const double d2 = bs_d2(k, v);
  return norm_cdf(d2 + v) - std::exp(k) * norm_cdf(d2);
}

double bs_put(double k, double v) {
  if (v <= 0.0) return std::max(std::exp(k) - 1.0, 0.0);
  const double d2 = bs_d2(k, v);
  return std::exp(k) * norm_cdf(-d2) - norm_cdf(-d2 - v);
}

double bs_vega(double k, double v) { return norm_pdf(bs_d2(k, v) + v); }

OptionSide otm_side(double k) { return k < 0.0 ? OptionSide::Put : OptionSide::Call; }

namespace {

double price_for(OptionSide side, double k, double v) {
  return side == OptionSide::Call ? bs_call(k, v) : bs_put(k, v);
}

}  // namespace

double implied_vol(double price, double k, double t, OptionSide side) {
  if (!(t > 0.0)) throw std::invalid_argument("implied_vol: maturity must be positive");
  const double ek = std::exp(k);
  const double lower = side == OptionSide::Call ? std::max(1.0 - ek, 0.0) : std::max(ek - 1.0, 0.0);
  const double upper = side == OptionSide::Call ? 1.0 : ek;
  if (!(price > lower && price < upper)) {
    throw DomainError("implied_vol: price outside the no-arbitrage band");
  }

  const double sqrt_t = std::sqrt(t);
  double lo = 1e-6 * sqrt_t;
  double hi = 5.0 * sqrt_t;
  if (price < price_for(side, k, lo) || price > price_for(side, k, hi))
    throw ConvergenceError("implied_vol: solution outside the volatility bracket [1e-6, 5]");

  double v = std::abs(k) < 1e-6 ? price * std::sqrt(2.0 * std::numbers::pi) : 0.3 * sqrt_t;
  if (!(v > lo && v < hi)) v = 0.5 * (lo + hi);

  for (int iter = 0; iter < 200; ++iter) {
    const double f = price_for(side, k, v) - price;
    if (f == 0.0) return v / sqrt_t;
    if (f > 0.0) hi = v; else lo = v;
    const double vega = bs_vega(k, v);
    double next = v - f / vega;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - v);
    v = next;
    if (step <= 1e-15 * v || hi - lo <= 1e-15 * v) {
      const double residual = std::abs(price_for(side, k, v) - price);
      if (residual <= 1e-12) return v / sqrt_t;
    }
  }
  throw ConvergenceError("implied_vol: no convergence within the iteration cap");
}

namespace {

double payoff(OptionSide side, double k, double x) {
  return side == OptionSide::Call ? std::max(std::exp(x) - std::exp(k), 0.0)
                                  : std::max(std::exp(k) - std::exp(x), 0.0);
}

}  // namespace

ImpliedPoint implied_vol_mc(const PathBatch& batch, double k, OptionSide side) {
  const double t = batch.maturity();
  const auto& s = batch.samples;
  const auto sum = summarize<1>(s.size(), [&](std::size_t m) {
    return std::array<double, 1>{payoff(side, k, s[m].x_T)};
  });
  ImpliedPoint p;
  p.t = t;
  p.k = k;
  p.sigma_bs = implied_vol(sum.mean[0], k, t, side);
  const double dprice_dsigma = std::sqrt(t) * bs_vega(k, std::sqrt(t) * p.sigma_bs);
  p.ci = kZ95 * sum.standard_error(0) / dprice_dsigma;
  return p;
}

ImpliedPoint implied_vol_mc(const PathBatch& batch, double k) {
  return implied_vol_mc(batch, k, otm_side(k));
}

double implied_skew_formula(double k, double t, double sigma_bs, double prob_above) {
  const double v = std::sqrt(t) * sigma_bs;
  const double d2 = bs_d2(k, v);
  const double denom = std::sqrt(t) * norm_pdf(d2);
  if (denom < 1e-12) throw DomainError("implied_skew: vega floor reached (deep wing)");
  return (norm_cdf(d2) - prob_above) / denom;
}

SkewEstimate implied_skew(const PathBatch& batch, double k) {
  const double t = batch.maturity();
  const auto side = otm_side(k);
  const auto& s = batch.samples;
  const auto sum = summarize<2>(s.size(), [&](std::size_t m) {
    return std::array<double, 2>{payoff(side, k, s[m].x_T), s[m].x_T >= k ? 1.0 : 0.0};
  });
  const double sigma = implied_vol(sum.mean[0], k, t, side);
  const double prob = sum.mean[1];
  SkewEstimate out;
  out.t = t;
  out.value = implied_skew_formula(k, t, sigma, prob);

  const double sqrt_t = std::sqrt(t);
  const double v = sqrt_t * sigma;
  const double d2 = bs_d2(k, v);
  const double phi2 = norm_pdf(d2);
  const double dd2_dv = k / (v * v) - 0.5;
  const double dskew_dv = dd2_dv * (1.0 + (norm_cdf(d2) - prob) * d2 / phi2) / sqrt_t;
  const double dv_dprice = 1.0 / bs_vega(k, v);
  out.ci = sum.delta_ci({dskew_dv * dv_dprice, -1.0 / (sqrt_t * phi2)});
  return out;
}

SkewEstimate fd_skew_bs(const PathBatch& batch, double y) {
  if (y == 0.0) throw std::invalid_argument("fd_skew_bs: y must be non-zero");
  const double t = batch.maturity();
  const double delta = std::abs(y) * std::pow(t, 0.5 - batch.params.hurst);
  const double kp = delta;
  const double km = -delta;
  const auto& s = batch.samples;
  const auto sum = summarize<2>(s.size(), [&](std::size_t m) {
    return std::array<double, 2>{payoff(OptionSide::Call, kp, s[m].x_T),
                                 payoff(OptionSide::Put, km, s[m].x_T)};
  });
  const double sp = implied_vol(sum.mean[0], kp, t, OptionSide::Call);
  const double sm = implied_vol(sum.mean[1], km, t, OptionSide::Put);
  const double sqrt_t = std::sqrt(t);
  SkewEstimate out;
  out.t = t;
  out.value = (sp - sm) / (2.0 * delta);
  const double gp = 1.0 / (sqrt_t * bs_vega(kp, sqrt_t * sp)) / (2.0 * delta);
  const double gm = -1.0 / (sqrt_t * bs_vega(km, sqrt_t * sm)) / (2.0 * delta);
  out.ci = sum.delta_ci({gp, gm});
  return out;
}

}  // namespace roughlv
