#include "roughlv/fbm_engine.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include <boost/random/normal_distribution.hpp>

#include "roughlv/quadrature.hpp"

namespace roughlv {

void validate_hurst(double H) {
  if (!(H > 0.0 && H <= 0.5)) {
    std::ostringstream msg;
    msg << "Hurst index must lie in (0, 1/2], got " << H;
    throw std::invalid_argument(msg.str());
  }
}

SimulationGrid::SimulationGrid(double maturity, int steps) : maturity_(maturity), steps_(steps) {
  if (!(maturity > 0.0) || !std::isfinite(maturity))
    throw std::invalid_argument("grid maturity must be positive and finite");
  if (steps < 1) throw std::invalid_argument("grid needs at least one step");
}

double SimulationGrid::time(int k) const {
  if (k < 0 || k > steps_) throw std::out_of_range("grid node index out of range");
  if (k == steps_) return maturity_;
  return maturity_ * static_cast<double>(k) / static_cast<double>(steps_);
}

std::vector<double> SimulationGrid::nodes() const {
  std::vector<double> t(static_cast<std::size_t>(steps_));
  for (int k = 1; k <= steps_; ++k) t[static_cast<std::size_t>(k - 1)] = time(k);
  return t;
}

double kernel_eval(double t, double s, double H) {
  if (t <= s) return 0.0;
  return std::sqrt(2.0 * H) * std::pow(t - s, H - 0.5);
}

double volterra_covariance(double t, double s, double H, double abs_tol) {
  if (s > t) std::swap(s, t);
  if (s <= 0.0) return 0.0;
  if (s == t) return std::pow(t, 2.0 * H);
  // v = (s - u)^{H+1/2} absorbs the (s-u)^{H-1/2} singularity; the Jacobian
  // cancels it exactly, leaving (t - s + v^{1/(H+1/2)})^{H-1/2}.
  const double a = H + 0.5;
  const double p = 1.0 / a;
  const double gap = t - s;
  auto integrand = [&](double v) { return std::pow(gap + std::pow(v, p), H - 0.5); };
  const double scale = 2.0 * H / a;
  return scale * integrate_adaptive(integrand, 0.0, std::pow(s, a), abs_tol / scale);
}

double cross_covariance(double s_w, double t_hat, double H) {
  const double m = std::min(s_w, t_hat);
  if (m <= 0.0) return 0.0;
  const double a = H + 0.5;
  return std::sqrt(2.0 * H) / a * (std::pow(t_hat, a) - std::pow(t_hat - m, a));
}

JointCovariance build_covariance(const SimulationGrid& grid, double H) {
  validate_hurst(H);
  const int n = grid.steps();
  const auto t = grid.nodes();
  JointCovariance out;
  out.hurst = H;
  out.steps = n;
  out.matrix.resize(2 * n, 2 * n);
  auto& c = out.matrix;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double ti = t[static_cast<std::size_t>(i)];
      const double tj = t[static_cast<std::size_t>(j)];
      c(i, j) = std::min(ti, tj);
      double vv = 0.0;
      try {
        vv = volterra_covariance(ti, tj, H);
      } catch (const QuadratureError& e) {
        std::ostringstream msg;
        msg << "covariance entry (" << n + i << ", " << n + j << ") failed: " << e.what();
        throw QuadratureError(msg.str());
      }
      c(n + i, n + j) = vv;
    }
    for (int j = 0; j < n; ++j) {
      // row: W^_{t_i}, column: W_{t_j}
      c(n + i, j) = cross_covariance(t[static_cast<std::size_t>(j)], t[static_cast<std::size_t>(i)], H);
    }
  }
  // mirror the lower triangle so the matrix is exactly symmetric
  for (int i = 0; i < 2 * n; ++i)
    for (int j = i + 1; j < 2 * n; ++j) c(i, j) = c(j, i);
  return out;
}

void write_covariance_csv(std::ostream& os, const JointCovariance& cov) {
  const auto& m = cov.matrix;
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
}

namespace {

struct CholeskyAttempt {
  bool ok = false;
  double worst_pivot = 0.0;
  int zero_pivots = 0;
};

CholeskyAttempt try_cholesky(const Eigen::MatrixXd& a, double shift, double zero_tol,
                             Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& l) {
  const Eigen::Index n = a.rows();
  l.setZero(n, n);
  CholeskyAttempt res;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double d = a(j, j) + shift - l.row(j).head(j).squaredNorm();
    if (d > zero_tol) {
      const double ljj = std::sqrt(d);
      l(j, j) = ljj;
      for (Eigen::Index i = j + 1; i < n; ++i)
        l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    } else if (d >= -zero_tol) {
      ++res.zero_pivots;
    } else {
      res.worst_pivot = std::min(res.worst_pivot, d);
    }
  }
  res.ok = res.worst_pivot == 0.0;
  return res;
}

}  // namespace

CholeskyFactor factorize(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() == 0)
    throw std::invalid_argument("factorize: expected a non-empty square matrix");
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (cov(i, j) != cov(j, i)) throw std::invalid_argument("factorize: matrix is not symmetric");

  const double max_diag = cov.diagonal().maxCoeff();
  const double zero_tol =
      4.0 * static_cast<double>(cov.rows()) * std::numeric_limits<double>::epsilon() * max_diag;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> l;

  double shift = 0.0;
  double worst = 0.0;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    const auto res = try_cholesky(cov, shift, zero_tol, l);
    if (res.ok) {
      CholeskyFactor f;
      f.lower = l;
      f.jitter = shift;
      f.zero_pivots = res.zero_pivots;
      return f;
    }
    worst = std::min(worst, res.worst_pivot);
    shift = 1e-12 * max_diag * std::pow(10.0, attempt);
  }
  std::ostringstream msg;
  msg << "covariance is indefinite beyond the jitter budget; most negative pivot " << worst;
  throw FactorizationError(msg.str(), worst);
}

std::uint64_t substream_key(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ (index * 0xD6E8FEB86659FD93ULL));
  h = splitmix(h ^ (stream + 0xA0761D6478BD642FULL));
  return h;
}

GaussianSampler::GaussianSampler(CholeskyFactor factor, SimulationGrid grid)
    : factor_(std::move(factor)), grid_(grid) {
  if (factor_.lower.rows() != 2 * grid_.steps())
    throw std::invalid_argument("sampler: factor dimension does not match the grid");
}

void GaussianSampler::draw_block(std::uint64_t seed, std::uint64_t block_index,
                                 std::uint64_t total, DrawBlock& out) const {
  const int n = grid_.steps();
  const std::uint64_t first = block_index * kBlockWidth;
  if (first >= total) throw std::out_of_range("sampler: block beyond requested sample count");
  const auto count = static_cast<std::size_t>(std::min<std::uint64_t>(kBlockWidth, total - first));

  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2 * n, kBlockWidth);
  out.bar_incr.setZero(n, kBlockWidth);
  const double sqrt_dt = std::sqrt(grid_.dt());
  boost::random::normal_distribution<double> normal;
  for (std::size_t c = 0; c < count; ++c) {
    const std::uint64_t index = first + c;
    std::mt19937_64 main(substream_key(seed, index, 0));
    normal.reset();
    for (int r = 0; r < 2 * n; ++r) z(r, static_cast<Eigen::Index>(c)) = normal(main);
    std::mt19937_64 bar(substream_key(seed, index, 1));
    normal.reset();
    for (int r = 0; r < n; ++r) out.bar_incr(r, static_cast<Eigen::Index>(c)) = sqrt_dt * normal(bar);
  }
  out.joint.noalias() = factor_.lower.triangularView<Eigen::Lower>() * z;
  out.first = first;
  out.count = count;
}

namespace {

GaussianDraw extract_draw(const DrawBlock& block, Eigen::Index col, int n) {
  GaussianDraw d;
  d.w.resize(static_cast<std::size_t>(n));
  d.w_hat.resize(static_cast<std::size_t>(n));
  d.w_bar_incr.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    d.w[static_cast<std::size_t>(k)] = block.joint(k, col);
    d.w_hat[static_cast<std::size_t>(k)] = block.joint(n + k, col);
    d.w_bar_incr[static_cast<std::size_t>(k)] = block.bar_incr(k, col);
  }
  return d;
}

}  // namespace

GaussianDraw GaussianSampler::draw(std::uint64_t seed, std::uint64_t index) const {
  DrawBlock block;
  draw_block(seed, index / kBlockWidth, index + 1, block);
  return extract_draw(block, static_cast<Eigen::Index>(index % kBlockWidth), grid_.steps());
}

std::vector<GaussianDraw> sample_batch(const GaussianSampler& sampler, std::uint64_t seed,
                                       std::size_t M) {
  std::vector<GaussianDraw> out;
  out.reserve(M);
  const int n = sampler.grid().steps();
  DrawBlock block;
  for (std::uint64_t b = 0; b * GaussianSampler::kBlockWidth < M; ++b) {
    sampler.draw_block(seed, b, M, block);
    for (std::size_t c = 0; c < block.count; ++c)
      out.push_back(extract_draw(block, static_cast<Eigen::Index>(c), n));
  }
  return out;
}

}  // namespace roughlv
