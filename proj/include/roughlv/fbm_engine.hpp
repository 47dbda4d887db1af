#pragma once

// Exact joint simulation of a Brownian motion W and the Riemann–Liouville
// fractional process  W^_t = int_0^t sqrt(2H) (t-s)^{H-1/2} dW_s  on a uniform
// grid, plus an independent Brownian motion W-bar.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace roughlv {

/// Rejects Hurst indices outside (0, 1/2].
void validate_hurst(double H);

/// Uniform grid t_k = k T / N, k = 0..N.  Node 0 is not part of the Gaussian
/// vector (all processes vanish there).
class SimulationGrid {
 public:
  SimulationGrid(double maturity, int steps);

  double maturity() const { return maturity_; }
  int steps() const { return steps_; }
  double dt() const { return maturity_ / steps_; }
  /// t_k for k in [0, N]; t_N is exactly T.
  double time(int k) const;
  /// Simulated nodes t_1..t_N.
  std::vector<double> nodes() const;

  friend bool operator==(const SimulationGrid&, const SimulationGrid&) = default;

 private:
  double maturity_;
  int steps_;
};

/// sqrt(2H) (t-s)^{H-1/2} for t > s, 0 otherwise.
double kernel_eval(double t, double s, double H);

/// Cov(W^_t, W^_s) = 2H int_0^{min(s,t)} (t-u)^{H-1/2} (s-u)^{H-1/2} du.
double volterra_covariance(double t, double s, double H, double abs_tol = 1e-12);

/// Cov(W_s, W^_t) in closed form.
double cross_covariance(double s_w, double t_hat, double H);

/// Covariance of (W_{t_1..t_N}, W^_{t_1..t_N}) as a 2N x 2N matrix.
struct JointCovariance {
  Eigen::MatrixXd matrix;
  double hurst = 0.5;
  int steps = 0;
};

JointCovariance build_covariance(const SimulationGrid& grid, double H);

/// Row-major CSV dump, 17 significant digits.
void write_covariance_csv(std::ostream& os, const JointCovariance& cov);

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& what, double pivot)
      : std::runtime_error(what), pivot_(pivot) {}
  double most_negative_pivot() const { return pivot_; }

 private:
  double pivot_;
};

struct CholeskyFactor {
  Eigen::MatrixXd lower;
  /// Diagonal shift that was needed (0 for a plain factorization).
  double jitter = 0.0;
  /// Number of pivots treated as exactly zero (rank deficiency).
  int zero_pivots = 0;
};

/// Lower Cholesky factor.  Pivots at round-off level are treated as exact
/// zeros; genuinely negative pivots trigger diagonal jitter
/// 1e-12 * max(diag), escalated 10x up to three times.
CholeskyFactor factorize(const Eigen::MatrixXd& cov);
inline CholeskyFactor factorize(const JointCovariance& cov) { return factorize(cov.matrix); }

struct GaussianDraw {
  std::vector<double> w;           ///< W at t_1..t_N
  std::vector<double> w_hat;       ///< W^ at t_1..t_N
  std::vector<double> w_bar_incr;  ///< N independent increments of W-bar
};

/// Column-major block of draws: column j holds sample (first + j).
struct DrawBlock {
  std::uint64_t first = 0;
  std::size_t count = 0;
  Eigen::MatrixXd joint;     ///< 2N x capacity, rows [W; W^]
  Eigen::MatrixXd bar_incr;  ///< N x capacity
};

/// Seeded sampler.  Every sample is a pure function of (seed, index): its
/// Gaussian inputs come from two substreams keyed on (seed, index, stream),
/// and it always occupies the same column of a fixed-width block product.
class GaussianSampler {
 public:
  static constexpr std::size_t kBlockWidth = 64;

  GaussianSampler(CholeskyFactor factor, SimulationGrid grid);

  const SimulationGrid& grid() const { return grid_; }
  const CholeskyFactor& factor() const { return factor_; }

  /// Fills samples [block_index * kBlockWidth, ...) up to `total` samples.
  void draw_block(std::uint64_t seed, std::uint64_t block_index, std::uint64_t total,
                  DrawBlock& out) const;

  GaussianDraw draw(std::uint64_t seed, std::uint64_t index) const;

 private:
  CholeskyFactor factor_;
  SimulationGrid grid_;
};

/// M draws materialized in index order (convenient for small M).
std::vector<GaussianDraw> sample_batch(const GaussianSampler& sampler, std::uint64_t seed,
                                       std::size_t M);

/// 64-bit key for the substream of (seed, index, stream).
std::uint64_t substream_key(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

}  // namespace roughlv
