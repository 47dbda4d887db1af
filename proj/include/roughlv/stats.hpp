#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace roughlv {

/// Two-sided 95% normal quantile used for every reported confidence half-width.
inline constexpr double kZ95 = 1.959963984540054;

namespace detail {

inline constexpr std::size_t kPairwiseLeaf = 64;

template <std::size_t P, class F>
std::array<double, P> pairwise_reduce(std::size_t first, std::size_t last, F& f) {
  std::array<double, P> acc{};
  if (last - first <= kPairwiseLeaf) {
    for (std::size_t m = first; m < last; ++m) {
      const std::array<double, P> v = f(m);
      for (std::size_t i = 0; i < P; ++i) acc[i] += v[i];
    }
    return acc;
  }
  const std::size_t mid = first + (last - first) / 2;
  const auto left = pairwise_reduce<P>(first, mid, f);
  const auto right = pairwise_reduce<P>(mid, last, f);
  for (std::size_t i = 0; i < P; ++i) acc[i] = left[i] + right[i];
  return acc;
}

}  // namespace detail

/// Ordered pairwise sum; the split points depend only on the length, so the
/// result is reproducible bit for bit for a given input order.
inline double pairwise_sum(std::span<const double> values) {
  auto f = [&](std::size_t m) { return std::array<double, 1>{values[m]}; };
  return detail::pairwise_reduce<1>(0, values.size(), f)[0];
}

/// Sample means and covariance of a P-vector statistic observed on n samples.
template <std::size_t P>
struct MomentSummary {
  std::size_t n = 0;
  std::array<double, P> mean{};
  std::array<std::array<double, P>, P> cov{};

  /// Variance of g(mean) under the first-order delta method.
  double delta_variance(const std::array<double, P>& gradient) const {
    double v = 0.0;
    for (std::size_t i = 0; i < P; ++i)
      for (std::size_t j = 0; j < P; ++j) v += gradient[i] * cov[i][j] * gradient[j];
    return v / static_cast<double>(n);
  }

  double delta_ci(const std::array<double, P>& gradient) const {
    return kZ95 * std::sqrt(std::max(delta_variance(gradient), 0.0));
  }

  double standard_error(std::size_t i) const {
    return std::sqrt(cov[i][i] / static_cast<double>(n));
  }
};

/// Two-pass (mean, then centred second moments) summary of f(0..n-1), with
/// every reduction done by ordered pairwise summation.
template <std::size_t P, class F>
MomentSummary<P> summarize(std::size_t n, F&& f) {
  if (n == 0) throw std::invalid_argument("summarize: empty sample");
  MomentSummary<P> s;
  s.n = n;
  const auto sums = detail::pairwise_reduce<P>(0, n, f);
  for (std::size_t i = 0; i < P; ++i) s.mean[i] = sums[i] / static_cast<double>(n);
  if (n < 2) return s;

  constexpr std::size_t kPairs = P * (P + 1) / 2;
  auto second = [&](std::size_t m) {
    const auto v = f(m);
    std::array<double, kPairs> out{};
    std::size_t idx = 0;
    for (std::size_t i = 0; i < P; ++i)
      for (std::size_t j = i; j < P; ++j)
        out[idx++] = (v[i] - s.mean[i]) * (v[j] - s.mean[j]);
    return out;
  };
  const auto c = detail::pairwise_reduce<kPairs>(0, n, second);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t j = i; j < P; ++j) {
      const double v = c[idx++] / static_cast<double>(n - 1);
      s.cov[i][j] = v;
      s.cov[j][i] = v;
    }
  return s;
}

}  // namespace roughlv
