#include "doctest.h"

#include <cmath>

#include "roughlv/markov_projection.hpp"

using namespace roughlv;

namespace {

PathBatch hand_batch() {
  PathBatch b;
  b.params = ModelParams(0.04, 1.0, -0.6, 0.2);
  b.grid = SimulationGrid(0.5, 4);
  b.samples = {{-0.05, 0.035, 0.021, 0.10}, {0.02, 0.050, 0.018, -0.04}, {0.11, 0.028, 0.025, 0.16}};
  return b;
}

}  // namespace

TEST_CASE("Pi weight matches its closed form") {
  const PathSample s{0.0, 0.04, 0.02, 0.1};
  const double rho = -0.6, k = 0.03;
  const double u = k + 0.01 - rho * 0.1;
  const auto w = pi_weight(s, k, rho);
  CHECK(w.u == doctest::Approx(u));
  CHECK(w.value == doctest::Approx(std::exp(-u * u / (2 * 0.64 * 0.02)) / std::sqrt(0.02)).epsilon(1e-14));
  CHECK(log_pi_weight(s, k, rho) == doctest::Approx(std::log(w.value)).epsilon(1e-14));
}

TEST_CASE("ratio estimator on a three-sample batch") {
  const auto b = hand_batch();
  const double k = 0.01, rho = -0.6;
  double num = 0.0, den = 0.0;
  for (const auto& s : b.samples) {
    const double u = k + 0.5 * s.int_v - rho * s.int_sqrtv_dW;
    const double pi = std::exp(-u * u / (2 * (1 - rho * rho) * s.int_v)) / std::sqrt(s.int_v);
    num += s.v_T * pi;
    den += pi;
  }
  CHECK(local_vol_ratio(b, k).sigma_loc == doctest::Approx(std::sqrt(num / den)).epsilon(1e-14));
}

TEST_CASE("kernel estimator on a three-sample batch") {
  const auto b = hand_batch();
  const double k = 0.0, delta = 200.0;
  double num = 0.0, den = 0.0;
  for (const auto& s : b.samples) {
    const double w = std::exp(-delta * (s.x_T - k) * (s.x_T - k));
    num += s.v_T * w;
    den += w;
  }
  const auto p = local_vol_kernel(b, k, delta);
  CHECK(p.sigma_loc == doctest::Approx(std::sqrt(num / den)).epsilon(1e-14));
  CHECK_FALSE(p.reliable);
  CHECK(p.method == LocalVolMethod::Kernel);
  CHECK(to_string(p.method) == "kernel");
}

TEST_CASE("kernel estimator degenerate support") {
  const auto b = hand_batch();
  CHECK_THROWS_AS(local_vol_kernel(b, 5.0, 1e6), DegenerateSupportError);
  CHECK_THROWS_AS(local_vol_kernel(b, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("Silverman bandwidth") {
  const auto b = hand_batch();
  double mean = 0.0;
  for (const auto& s : b.samples) mean += s.x_T / 3;
  double var = 0.0;
  for (const auto& s : b.samples) var += (s.x_T - mean) * (s.x_T - mean) / 2;
  const double bw = 1.06 * std::sqrt(var) * std::pow(3.0, -0.2);
  CHECK(silverman_bandwidth(b) == doctest::Approx(1.0 / (2 * bw * bw)));
}

TEST_CASE("flat model: both estimators return the spot vol") {
  const ModelParams flat(0.0625, 0.0, -0.7, 0.1);
  const auto b = simulate_batch(flat, SimulationGrid(0.2, 8), 1, 5000);
  for (double k : {-0.1, 0.0, 0.1}) {
    CHECK(local_vol_ratio(b, k).sigma_loc == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(local_vol_kernel(b, k).sigma_loc == doctest::Approx(0.25).epsilon(1e-14));
  }
}

TEST_CASE("local skew equals the derivative of the ratio estimator") {
  const auto b = simulate_batch(reference_params(0.1), SimulationGrid(0.1, 32), 6, 20000);
  const double h = 1e-5;
  for (double k : {-0.05, 0.0, 0.04}) {
    const double fd = (local_vol_ratio(b, k + h).sigma_loc - local_vol_ratio(b, k - h).sigma_loc) / (2 * h);
    const auto s = local_skew(b, k);
    CHECK(s.value == doctest::Approx(fd).epsilon(1e-6));
    CHECK(s.ci > 0.0);
  }
}

TEST_CASE("estimators agree and the skew is negative in the reference model") {
  const auto b = simulate_batch(reference_params(0.3), SimulationGrid(0.2, 64), 12, 60000);
  for (double k : {-0.05, 0.0, 0.05}) {
    const auto kern = local_vol_kernel(b, k);
    const auto ratio = local_vol_ratio(b, k);
    CHECK(kern.reliable);
    CHECK(std::abs(kern.sigma_loc - ratio.sigma_loc) < kern.ci + ratio.ci);
    CHECK(ratio.ci < kern.ci);
  }
  const auto s = local_skew(b, 0.0);
  const auto fd = fd_skew_loc(b, 0.02);
  CHECK(s.value < 0.0);
  CHECK(std::abs(s.value - fd.value) < 2.0 * (s.ci + fd.ci));
  CHECK_THROWS_AS(fd_skew_loc(b, 0.0), std::invalid_argument);
}
