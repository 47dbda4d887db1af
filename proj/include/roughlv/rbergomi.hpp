#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "roughlv/fbm_engine.hpp"

namespace roughlv {

/// Rough Bergomi parameters with S0 = 1 and zero rates.
struct ModelParams {
  double xi0 = 0.235 * 0.235;  ///< spot variance V_0
  double eta = 1.0;            ///< vol-of-variance
  double rho = -0.7;           ///< spot/vol correlation
  double hurst = 0.1;

  ModelParams() = default;
  ModelParams(double xi0, double eta, double rho, double hurst);

  /// Throws std::invalid_argument unless xi0 > 0, eta >= 0, |rho| < 1 and H in (0, 1/2].
  void validate() const;

  double rho_bar() const;
  double spot_vol() const;
  /// Time-homogeneous volatility function sigma(x) = sqrt(xi0) exp(eta x / 2).
  double sigma(double x) const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Reference parameters (xi0 = 0.235^2, eta = 1, rho = -0.7) at Hurst index H.
ModelParams reference_params(double H);

struct PathSample {
  double x_T = 0.0;           ///< terminal log-price
  double v_T = 0.0;           ///< terminal instantaneous variance
  double int_v = 0.0;         ///< left-point  int_0^T V ds
  double int_sqrtv_dW = 0.0;  ///< left-point  int_0^T sqrt(V) dW
};

struct PathBatch {
  std::vector<PathSample> samples;
  ModelParams params;
  SimulationGrid grid{1.0, 1};
  std::uint64_t seed = 0;

  std::size_t size() const { return samples.size(); }
  double maturity() const { return grid.maturity(); }
};

/// V at nodes t_0..t_N (V_{t_0} = xi0).  The Euler step uses t_0..t_{N-1};
/// t_N is the terminal variance.
std::vector<double> variance_path(std::span<const double> w_hat, const ModelParams& params,
                                  const SimulationGrid& grid);
std::vector<double> variance_path(const GaussianDraw& draw, const ModelParams& params,
                                  const SimulationGrid& grid);

/// Forward Euler log-price and the left-point pathwise integrals.
PathSample euler_logprice(const GaussianDraw& draw, std::span<const double> variance,
                          const ModelParams& params, const SimulationGrid& grid);

/// Covariance factor and sampler for (grid, H); reusable across seeds.
GaussianSampler make_sampler(const SimulationGrid& grid, double H);

/// M samples; a pure function of (params, grid, seed, M) for any thread count.
PathBatch simulate_batch(const ModelParams& params, const SimulationGrid& grid,
                         std::uint64_t seed, std::size_t M, int threads = 1);
PathBatch simulate_batch(const GaussianSampler& sampler, const ModelParams& params,
                         std::uint64_t seed, std::size_t M, int threads = 1);

/// CSV with a '#'-prefixed header recording params, grid and seed, then
/// columns index,x_T,v_T,int_v,int_sqrtv_dW at 17 significant digits.
void write_batch_csv(std::ostream& os, const PathBatch& batch);
PathBatch read_batch_csv(std::istream& is);

}  // namespace roughlv
