#pragma once

#include <stdexcept>

#include "roughlv/rbergomi.hpp"

namespace roughlv {

// S0 = 1, zero rates throughout; strikes are log-moneyness k = log(K / S0).

double norm_cdf(double x);
double norm_pdf(double x);

/// d2(k, v) = -k/v - v/2.
double bs_d2(double k, double v);

/// Call price for total volatility v = sqrt(t) sigma; (1 - e^k)^+ at v = 0.
double bs_call(double k, double v);
/// Put price, evaluated directly (no parity subtraction).
double bs_put(double k, double v);
/// dC/dv = phi(d1), identical for puts.
double bs_vega(double k, double v);

enum class OptionSide { Call, Put };

/// Out-of-the-money side: puts for k < 0, calls for k >= 0.
OptionSide otm_side(double k);

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Newton on the total volatility, falling back to bisection on
/// sigma in [1e-6, 5] whenever a step leaves the bracket.
double implied_vol(double price, double k, double t, OptionSide side = OptionSide::Call);

struct ImpliedPoint {
  double t = 0.0;
  double k = 0.0;
  double sigma_bs = 0.0;
  double ci = 0.0;  ///< 95% half-width
};

/// Implied vol from the empirical out-of-the-money option price of a batch.
ImpliedPoint implied_vol_mc(const PathBatch& batch, double k);
/// Same, forcing the option side (for parity checks).
ImpliedPoint implied_vol_mc(const PathBatch& batch, double k, OptionSide side);

struct SkewEstimate {
  double t = 0.0;
  double value = 0.0;
  double ci = 0.0;  ///< 95% half-width
};

/// (N(d2) - P(X_t >= k)) / (sqrt(t) phi(d2)) at v = sqrt(t) sigma_BS(t, k).
double implied_skew_formula(double k, double t, double sigma_bs, double prob_above);

/// Finite-difference-free implied skew; price and exceedance probability
/// come from the same batch and the CI uses their joint covariance.
SkewEstimate implied_skew(const PathBatch& batch, double k);

/// (sigma_BS(t, y t^{1/2-H}) - sigma_BS(t, -y t^{1/2-H})) / (2 y t^{1/2-H}).
SkewEstimate fd_skew_bs(const PathBatch& batch, double y);

}  // namespace roughlv
