#include "doctest.h"

#include <cmath>
#include <sstream>

#include "roughlv/rbergomi.hpp"
#include "roughlv/stats.hpp"

using namespace roughlv;

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(ModelParams(0.04, 1.0, -0.7, 0.1));
  CHECK_THROWS_AS(ModelParams(0.0, 1.0, -0.7, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(0.04, -1.0, -0.7, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(0.04, 1.0, -1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(0.04, 1.0, 0.0, 0.7), std::invalid_argument);
  const auto p = reference_params(0.3);
  CHECK(p.xi0 == doctest::Approx(0.055225));
  CHECK(p.rho_bar() == doctest::Approx(std::sqrt(0.51)));
  CHECK(p.sigma(0.0) == doctest::Approx(0.235));
  CHECK(p.sigma(2.0) == doctest::Approx(0.235 * std::exp(1.0)));
}

TEST_CASE("variance path") {
  const SimulationGrid g(1.0, 4);
  const auto p = reference_params(0.2);
  const std::vector<double> w_hat{0.1, -0.2, 0.3, 0.0};
  const auto v = variance_path(w_hat, p, g);
  REQUIRE(v.size() == 5);
  CHECK(v[0] == p.xi0);
  CHECK(v[2] == doctest::Approx(p.xi0 * std::exp(-0.2 - 0.5 * std::pow(0.5, 0.4))));
  const ModelParams flat(0.04, 0.0, -0.5, 0.2);
  for (double x : variance_path(w_hat, flat, g)) CHECK(x == 0.04);
  CHECK_THROWS_AS(variance_path(std::vector<double>{1.0}, p, g), std::invalid_argument);
}

TEST_CASE("Euler step by hand") {
  const SimulationGrid g(1.0, 2);
  const ModelParams p(0.04, 1.0, -0.5, 0.3);
  GaussianDraw d;
  d.w = {0.3, 0.1};
  d.w_hat = {0.2, -0.1};
  d.w_bar_incr = {0.05, -0.4};
  const auto v = variance_path(d, p, g);
  const auto s = euler_logprice(d, v, p, g);
  const double int_v = 0.5 * (v[0] + v[1]);
  const double sdw = std::sqrt(v[0]) * 0.3 + std::sqrt(v[1]) * (0.1 - 0.3);
  const double sdb = std::sqrt(v[0]) * 0.05 + std::sqrt(v[1]) * -0.4;
  CHECK(s.int_v == doctest::Approx(int_v));
  CHECK(s.int_sqrtv_dW == doctest::Approx(sdw));
  CHECK(s.x_T == doctest::Approx(-0.5 * int_v - 0.5 * sdw + p.rho_bar() * sdb));
  CHECK(s.v_T == v[2]);
}

TEST_CASE("batch equals the per-draw pipeline and is thread-count invariant") {
  const SimulationGrid g(0.2, 16);
  const auto p = reference_params(0.1);
  const auto sampler = make_sampler(g, p.hurst);
  const auto one = simulate_batch(sampler, p, 5, 200, 1);
  const auto three = simulate_batch(sampler, p, 5, 200, 3);
  const auto draws = sample_batch(sampler, 5, 200);
  for (std::size_t m = 0; m < 200; ++m) {
    const auto ref = euler_logprice(draws[m], variance_path(draws[m], p, g), p, g);
    CHECK(one.samples[m].x_T == ref.x_T);
    CHECK(one.samples[m].v_T == ref.v_T);
    CHECK(one.samples[m].int_v == ref.int_v);
    CHECK(one.samples[m].int_sqrtv_dW == ref.int_sqrtv_dW);
    CHECK(three.samples[m].x_T == one.samples[m].x_T);
  }
}

TEST_CASE("martingale and forward-variance properties") {
  const auto p = reference_params(0.1);
  const auto b = simulate_batch(p, SimulationGrid(0.5, 32), 17, 40000);
  const auto s = summarize<2>(b.size(), [&](std::size_t m) {
    return std::array<double, 2>{std::exp(b.samples[m].x_T), b.samples[m].v_T};
  });
  CHECK(std::abs(s.mean[0] - 1.0) < 4.0 * s.standard_error(0));
  CHECK(std::abs(s.mean[1] - p.xi0) < 4.0 * s.standard_error(1));
}

TEST_CASE("flat variance gives Black-Scholes log-returns") {
  const ModelParams flat(0.04, 0.0, -0.7, 0.3);
  const auto b = simulate_batch(flat, SimulationGrid(1.0, 8), 2, 20000);
  for (const auto& s : b.samples) {
    CHECK(s.int_v == doctest::Approx(0.04));
    CHECK(s.v_T == 0.04);
  }
  const auto sum = summarize<1>(b.size(), [&](std::size_t m) { return std::array<double, 1>{b.samples[m].x_T}; });
  CHECK(std::abs(sum.mean[0] + 0.02) < 4.0 * sum.standard_error(0));
  CHECK(sum.cov[0][0] == doctest::Approx(0.04).epsilon(0.03));
}

TEST_CASE("batch CSV round trip") {
  const auto b = simulate_batch(reference_params(0.3), SimulationGrid(0.1, 8), 99, 50);
  std::stringstream ss;
  write_batch_csv(ss, b);
  const auto r = read_batch_csv(ss);
  CHECK(r.params == b.params);
  CHECK(r.grid == b.grid);
  CHECK(r.seed == b.seed);
  REQUIRE(r.size() == b.size());
  for (std::size_t m = 0; m < b.size(); ++m) {
    CHECK(r.samples[m].x_T == b.samples[m].x_T);
    CHECK(r.samples[m].int_sqrtv_dW == b.samples[m].int_sqrtv_dW);
  }
  std::stringstream bad("# xi0=0.1\nindex,x_T\n");
  CHECK_THROWS(read_batch_csv(bad));
}
