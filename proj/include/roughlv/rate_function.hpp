#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "roughlv/rbergomi.hpp"

namespace roughlv {

// Short-time large-deviations rate function of the log-price,
//
//   Lambda(y) = inf_h  (y - rho G(h))^2 / (2 rho_bar^2 F(h)) + <h', h'> / 2,
//   F(h) = int_0^1 sigma^2(h^_t) dt,   G(h) = int_0^1 sigma(h^_t) h'_t dt,
//
// minimized over h' = sum_n a_n e'_n in a truncated Fourier basis (Ritz).
// sigma(x) = sqrt(xi0) exp(eta x / 2) is the time-homogeneous rough Bergomi
// volatility function.

struct RitzConfig {
  int n_basis = 8;
  int quad_nodes = 256;  ///< composite Gauss–Legendre nodes on [0, 1]
  double tol = 1e-8;     ///< gradient infinity-norm at convergence
  int max_iter = 500;

  void validate() const;
};

/// e'_1 = 1, e'_{2n} = sqrt2 cos(2 pi n t), e'_{2n+1} = sqrt2 sin(2 pi n t).
double fourier_basis(int n, double t);

/// h^_t = int_0^t K(t,s) h'_s ds for h' = sum_n coeffs[n-1] e'_n.
double hat_transform(std::span<const double> coeffs, double t, double H);

struct RateSolution {
  double y = 0.0;
  std::vector<double> coeffs;
  double lambda = 0.0;       ///< Lambda(y)
  double h_hat_1 = 0.0;      ///< h^y_1 hat at t = 1
  double sigma_limit = 0.0;  ///< Sigma(y) = sigma(h^_1)
  double chi = 0.0;          ///< |y| / sqrt(2 Lambda(y)), sigma_0 at y = 0
  int iterations = 0;
};

class OptimizationError : public std::runtime_error {
 public:
  OptimizationError(const std::string& what, std::vector<double> last)
      : std::runtime_error(what), last_iterate_(std::move(last)) {}
  const std::vector<double>& last_iterate() const { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

/// Precomputes the basis and its Volterra transform on the quadrature grid;
/// the objective is then a cheap function of the coefficients.
class RateFunction {
 public:
  RateFunction(const ModelParams& params, const RitzConfig& config = {});

  const ModelParams& params() const { return params_; }
  const RitzConfig& config() const { return config_; }

  double objective(std::span<const double> coeffs, double y) const;
  double hat_at_one(std::span<const double> coeffs) const;

  /// Zero start plus one start at a_1 = rho y / sigma_0; lowest converged wins.
  RateSolution minimize(double y) const;
  /// Single run from the given start (used for warm-started scans).
  RateSolution minimize_from(double y, std::span<const double> start) const;

 private:
  RateSolution finish(double y, std::vector<double> coeffs, double value, int iterations) const;

  ModelParams params_;
  RitzConfig config_;
  std::vector<double> weights_;
  std::vector<double> basis_;      // [node * n_basis + n]
  std::vector<double> hat_basis_;  // same layout
  std::vector<double> hat_one_;    // e^_n(1)
};

double objective(std::span<const double> coeffs, double y, const ModelParams& params,
                 const RitzConfig& config = {});

RateSolution minimize_rate(double y, const ModelParams& params, const RitzConfig& config = {});

/// Sigma(y) and chi(y) on a grid.  Sequential mode sweeps outwards from the
/// point nearest y = 0, warm-starting each minimization from its neighbour;
/// parallel mode solves every point independently.  Output is sorted by y.
std::vector<RateSolution> limiting_smile(std::vector<double> y_grid, const ModelParams& params,
                                         const RitzConfig& config = {}, int threads = 1);

struct SkewConstants {
  double k1_at_one = 0.0;  ///< K1(1), K1(t) = int_0^t K(t,s) ds
  double k1_mean = 0.0;    ///< <K1, 1> = int_0^1 K1(t) dt
  double ratio = 0.0;      ///< K1(1) / <K1, 1>
  double sigma_slope = 0.0;  ///< dSigma/dy at 0: (eta/2) rho K1(1)
};

SkewConstants skew_constants(const ModelParams& params);

}  // namespace roughlv
