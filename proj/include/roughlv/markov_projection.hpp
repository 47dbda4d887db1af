#pragma once

#include <stdexcept>
#include <string_view>

#include "roughlv/black_scholes.hpp"
#include "roughlv/rbergomi.hpp"

namespace roughlv {

// Markovian projection sigma_loc^2(t, k) = E[V_t | X_t = k] estimated from a
// PathBatch, either by Nadaraya–Watson regression or by the conditional
// Gaussian representation E[V Pi] / E[Pi].

enum class LocalVolMethod { Kernel, Ratio };

std::string_view to_string(LocalVolMethod m);

struct LocalVolPoint {
  double t = 0.0;
  double k = 0.0;
  double sigma_loc = 0.0;
  LocalVolMethod method = LocalVolMethod::Ratio;
  double ci = 0.0;        ///< 95% half-width on sigma_loc
  bool reliable = true;   ///< kernel only: false when < 50 samples carry 99% of the mass
};

class DegenerateSupportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnstableEstimateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// delta = 1 / (2 b^2),  b = 1.06 std(x_T) M^{-1/5}.
double silverman_bandwidth(const PathBatch& batch);

/// Gaussian-kernel regression with K_delta(x) = exp(-delta x^2).
LocalVolPoint local_vol_kernel(const PathBatch& batch, double k, double delta);
LocalVolPoint local_vol_kernel(const PathBatch& batch, double k);

/// Conditional density weight Pi_t(k) and the residual U(k) of one sample.
struct PiWeight {
  double value = 0.0;
  double u = 0.0;
};

PiWeight pi_weight(const PathSample& s, double k, double rho);

/// log Pi_t(k); used for scale-free reductions.
double log_pi_weight(const PathSample& s, double k, double rho);

/// Bandwidth-free estimator E[V_T Pi] / E[Pi].
LocalVolPoint local_vol_ratio(const PathBatch& batch, double k);

/// d sigma_loc / dk from the differentiated ratio representation.
SkewEstimate local_skew(const PathBatch& batch, double k);

/// (sigma_loc(t, y t^{1/2-H}) - sigma_loc(t, -y t^{1/2-H})) / (2 y t^{1/2-H})
/// with the ratio estimator.
SkewEstimate fd_skew_loc(const PathBatch& batch, double y);

}  // namespace roughlv
