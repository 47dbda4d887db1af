#include "doctest.h"

#include <cmath>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/expm1.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/hypergeometric_pFq.hpp>

#include "roughlv/fbm_engine.hpp"

using namespace roughlv;

namespace {

// 2H/(H+1/2) s^{H+1/2} t^{H-1/2} 2F1(1/2-H, 1; H+3/2; s/t), s < t.
double covariance_hypergeometric(double t, double s, double H) {
  const double f = boost::math::hypergeometric_pFq({0.5 - H, 1.0}, {H + 1.5}, s / t);
  return 2.0 * H / (H + 0.5) * std::pow(s, H + 0.5) * std::pow(t, H - 0.5) * f;
}

double covariance_tanh_sinh(double t, double s, double H) {
  boost::math::quadrature::tanh_sinh<double> ts;
  return 2.0 * H * ts.integrate([&](double u) {
    return std::pow(t - u, H - 0.5) * std::pow(s - u, H - 0.5);
  }, 0.0, std::min(s, t));
}

}  // namespace

TEST_CASE("hurst validation") {
  CHECK_NOTHROW(validate_hurst(0.5));
  CHECK_NOTHROW(validate_hurst(0.01));
  CHECK_THROWS_AS(validate_hurst(0.0), std::invalid_argument);
  CHECK_THROWS_AS(validate_hurst(0.6), std::invalid_argument);
  CHECK_THROWS_AS(validate_hurst(std::nan("")), std::invalid_argument);
}

TEST_CASE("grid") {
  const SimulationGrid g(0.3, 7);
  CHECK(g.time(0) == 0.0);
  CHECK(g.time(7) == 0.3);
  CHECK(g.nodes().size() == 7);
  CHECK(g.dt() == doctest::Approx(0.3 / 7));
  CHECK_THROWS_AS(SimulationGrid(0.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(SimulationGrid(1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(g.time(8), std::out_of_range);
}

TEST_CASE("kernel values") {
  CHECK(kernel_eval(1.0, 0.5, 0.1) == doctest::Approx(std::sqrt(0.2) * std::pow(0.5, -0.4)));
  CHECK(kernel_eval(1.0, 0.5, 0.1) == doctest::Approx(0.590102).epsilon(1e-6));
  CHECK(kernel_eval(0.5, 1.0, 0.1) == 0.0);
  CHECK(kernel_eval(2.0, 0.3, 0.5) == 1.0);
}

TEST_CASE("Volterra covariance against the hypergeometric closed form") {
  for (double H : {0.07, 0.1, 0.3, 0.45})
    for (auto [t, s] : {std::pair{1.0, 0.5}, {1.0, 0.01}, {0.37, 0.2}, {2.0, 1.9}}) {
      const double oracle = covariance_hypergeometric(t, s, H);
      CHECK(volterra_covariance(t, s, H) == doctest::Approx(oracle).epsilon(1e-10));
      CHECK(volterra_covariance(s, t, H) == doctest::Approx(oracle).epsilon(1e-10));
      CHECK(oracle == doctest::Approx(covariance_tanh_sinh(t, s, H)).epsilon(1e-8));
    }
}

TEST_CASE("Volterra covariance diagonal and H = 1/2") {
  for (double H : {0.1, 0.3, 0.5})
    for (double t : {0.05, 0.5, 1.0})
      CHECK(volterra_covariance(t, t, H) == doctest::Approx(std::pow(t, 2.0 * H)).epsilon(1e-12));
  CHECK(volterra_covariance(1.0, 0.4, 0.5) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("cross covariance") {
  CHECK(cross_covariance(1.0, 1.0, 0.1) == doctest::Approx(0.745356).epsilon(1e-6));
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double H : {0.1, 0.3})
    for (auto [s, t] : {std::pair{0.3, 1.0}, {1.0, 0.3}, {0.5, 0.5}}) {
      const double oracle = ts.integrate([&](double u) { return kernel_eval(t, u, H); }, 0.0, std::min(s, t));
      CHECK(cross_covariance(s, t, H) == doctest::Approx(oracle).epsilon(1e-10));
    }
  CHECK(cross_covariance(0.3, 0.8, 0.5) == doctest::Approx(0.3));
}

TEST_CASE("joint covariance layout") {
  const SimulationGrid g(1.0, 4);
  const auto c = build_covariance(g, 0.2);
  REQUIRE(c.matrix.rows() == 8);
  CHECK(c.matrix.isApprox(c.matrix.transpose(), 0.0));
  CHECK(c.matrix(0, 3) == doctest::Approx(0.25));
  CHECK(c.matrix(1, 6) == doctest::Approx(cross_covariance(0.5, 0.75, 0.2)));
  CHECK(c.matrix(7, 7) == doctest::Approx(1.0));
  std::ostringstream os;
  write_covariance_csv(os, c);
  const std::string text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 8);
}

TEST_CASE("Cholesky by hand") {
  Eigen::MatrixXd a(2, 2);
  a << 4, 2, 2, 3;
  const auto f = factorize(a);
  CHECK(f.lower(0, 0) == doctest::Approx(2.0));
  CHECK(f.lower(1, 0) == doctest::Approx(1.0));
  CHECK(f.lower(1, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(f.lower(0, 1) == 0.0);
  CHECK(f.jitter == 0.0);
}

TEST_CASE("Cholesky errors") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(factorize(asym), std::invalid_argument);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  try {
    factorize(indefinite);
    FAIL("expected a factorization error");
  } catch (const FactorizationError& e) {
    CHECK(e.most_negative_pivot() < 0.0);
  }
}

TEST_CASE("Cholesky round trip on the joint covariance") {
  for (double H : {0.1, 0.3, 0.5}) {
    const auto c = build_covariance(SimulationGrid(1.0, 64), H);
    const auto f = factorize(c);
    const Eigen::MatrixXd back = f.lower * f.lower.transpose();
    CHECK((back - c.matrix).cwiseAbs().maxCoeff() <= 1e-10 * c.matrix.diagonal().maxCoeff());
  }
}

TEST_CASE("H = 1/2 is rank deficient and W^ coincides with W") {
  const SimulationGrid g(1.0, 32);
  const auto f = factorize(build_covariance(g, 0.5));
  CHECK(f.zero_pivots == 32);
  const GaussianSampler sampler(f, g);
  for (std::uint64_t i : {0u, 5u, 77u}) {
    const auto d = sampler.draw(11, i);
    for (int k = 0; k < 32; ++k) CHECK(std::abs(d.w_hat[k] - d.w[k]) < 1e-12);
  }
}

TEST_CASE("sampler determinism") {
  const SimulationGrid g(0.5, 16);
  const GaussianSampler sampler(factorize(build_covariance(g, 0.1)), g);
  const auto all = sample_batch(sampler, 3, 130);
  REQUIRE(all.size() == 130);
  for (std::uint64_t i : {0u, 63u, 64u, 129u}) {
    const auto d = sampler.draw(3, i);
    CHECK(d.w == all[i].w);
    CHECK(d.w_hat == all[i].w_hat);
    CHECK(d.w_bar_incr == all[i].w_bar_incr);
  }
  // a prefix of a larger batch is the smaller batch
  const auto fewer = sample_batch(sampler, 3, 70);
  CHECK(fewer[69].w_hat == all[69].w_hat);
  CHECK(sampler.draw(4, 0).w != all[0].w);
  CHECK(substream_key(1, 2, 0) != substream_key(1, 2, 1));
  CHECK(substream_key(1, 2, 0) != substream_key(2, 1, 0));
}

TEST_CASE("sample moments match the covariance") {
  const SimulationGrid g(1.0, 8);
  const double H = 0.1;
  const GaussianSampler sampler(factorize(build_covariance(g, H)), g);
  const std::size_t M = 40000;
  const auto draws = sample_batch(sampler, 9, M);
  for (int k : {0, 3, 7}) {
    const double t = g.time(k + 1);
    double s2 = 0.0, s4 = 0.0, cross = 0.0, bar = 0.0;
    for (const auto& d : draws) {
      s2 += d.w_hat[k] * d.w_hat[k];
      s4 += std::pow(d.w_hat[k], 4);
      cross += d.w[k] * d.w_hat[k];
      bar += d.w_bar_incr[k] * d.w_bar_incr[k];
    }
    s2 /= M;
    s4 /= M;
    const double se = std::sqrt((s4 - s2 * s2) / M);
    CHECK(std::abs(s2 - std::pow(t, 2 * H)) < 5 * se);
    CHECK(cross / M == doctest::Approx(cross_covariance(t, t, H)).epsilon(0.05));
    CHECK(bar / M == doctest::Approx(g.dt()).epsilon(0.05));
  }
}
