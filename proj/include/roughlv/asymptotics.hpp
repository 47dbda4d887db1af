#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "roughlv/black_scholes.hpp"
#include "roughlv/markov_projection.hpp"
#include "roughlv/rate_function.hpp"

namespace roughlv {

/// Short-maturity limit of the implied/local ATM skew ratio.
inline double skew_ratio_target(double H) { return 1.0 / (H + 1.5); }

struct SkewRatioPoint {
  double t = 0.0;
  double skew_bs = 0.0;
  double skew_loc = 0.0;
  double ratio = 0.0;
  double ci = 0.0;       ///< approximate: the two skews are treated as independent
  double target = 0.0;
  bool defined = true;   ///< false when the local-skew CI contains 0
};

SkewRatioPoint skew_ratio_point(const SkewEstimate& skew_bs, const SkewEstimate& skew_loc,
                                double H);

/// ATM implied_skew / local_skew, one point per batch (maturity).
std::vector<SkewRatioPoint> skew_ratio_curve(std::span<const PathBatch* const> batches);

/// k / int_0^k dy / sigma_loc(y), trapezoid on 1/sigma_loc over `nodes`
/// equal sub-intervals; sigma_loc(0) at k = 0.
double harmonic_mean(const std::function<double(double)>& sigma_loc, double k, int nodes = 64);

/// Same, from sigma_loc tabulated on y_nodes (sorted, covering [min(0,k), max(0,k)]);
/// 1/sigma_loc is interpolated linearly between nodes.
double harmonic_mean(std::span<const double> y_nodes, std::span<const double> sigma_nodes, double k);

struct HarmonicPoint {
  double t = 0.0;
  double k = 0.0;
  double sigma_bs = 0.0;
  double sigma_bs_ci = 0.0;
  double harmonic = 0.0;
  double harmonic_ci = 0.0;
  double ratio = 0.0;  ///< sigma_BS / H
  double ci = 0.0;
};

/// sigma_BS(T, k) / H(T, k) with the ratio estimator feeding the harmonic mean.
HarmonicPoint harmonic_point(const PathBatch& batch, double k, int nodes = 16);
std::vector<HarmonicPoint> harmonic_failure_report(std::span<const PathBatch* const> batches,
                                                   std::span<const double> strikes, int nodes = 16);

struct DupireSteps {
  double dt_fraction = 0.1;  ///< dt = t * dt_fraction
  double dk = 0.01;
};

struct DupirePoint {
  double sigma_loc = 0.0;
  bool flagged = false;  ///< non-positive numerator or denominator
};

/// Dupire local vol in implied-vol form with central differences.
DupirePoint dupire_check(const std::function<double(double, double)>& sigma_bs, double t, double k,
                         const DupireSteps& steps = {});

/// -t^{2H} log P(X_t >= y t^{1/2-H}) (y >= 0) or P(X_t <= ...) (y < 0);
/// empty when no sample lands in the tail.
std::optional<double> ldp_diagnostic(const PathBatch& batch, double y);

/// Sigma(k / T^{1/2-H}) by linear interpolation on a sorted limiting smile.
double extrapolate_local_vol(std::span<const RateSolution> smile, double H, double T, double k);

}  // namespace roughlv
