#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "roughlv/experiments.hpp"

using namespace roughlv;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("roughlv_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig tiny(const fs::path& out) {
  auto c = profile_config(Profile::Smoke);
  c.paths = 3000;
  c.steps = 16;
  c.maturities = {0.1, 0.2};
  c.hurst_values = {0.1, 0.5};
  c.strikes = {-0.05, 0.0, 0.05};
  c.y_grid = {-0.1, 0.1};
  c.out_dir = out;
  return c;
}

}  // namespace

TEST_CASE("profiles") {
  CHECK(parse_profile("desk") == Profile::Desk);
  CHECK(to_string(Profile::Smoke) == "smoke");
  CHECK_THROWS_AS(parse_profile("fast"), ConfigError);
  const auto desk = profile_config(Profile::Desk);
  CHECK(desk.paths == 200000);
  CHECK(desk.steps == 256);
  CHECK(desk.maturities == std::vector<double>{0.05, 0.1, 0.2, 0.3, 0.4, 0.5});
  const auto paper = profile_config(Profile::Paper);
  CHECK(paper.paths == 1500000);
  CHECK(paper.steps == 500);
  CHECK_NOTHROW(desk.validate());
}

TEST_CASE("INI overlay") {
  std::istringstream in(
      "[model]\neta = 0\nhurst = 0.2, 0.4\n"
      "[grid]\nmaturities = 0.1,0.3\nseed = 7\npaths = 1000\n"
      "[ritz]\nn_basis = 4\n[run]\nthreads = 2\nout = somewhere\n");
  const auto c = load_config(in, profile_config(Profile::Desk));
  CHECK(c.params.eta == 0.0);
  CHECK(c.hurst_values == std::vector<double>{0.2, 0.4});
  CHECK(c.maturities == std::vector<double>{0.1, 0.3});
  CHECK(c.seed == 7);
  CHECK(c.paths == 1000);
  CHECK(c.ritz.n_basis == 4);
  CHECK(c.threads == 2);
  CHECK(c.out_dir == fs::path("somewhere"));
  CHECK(c.steps == 256);
}

TEST_CASE("shipped desk config spells out the desk defaults") {
  const auto desk = profile_config(Profile::Desk);
  const auto loaded = load_config(fs::path(ROUGHLV_CONFIG_DIR) / "desk.ini", profile_config(Profile::Smoke));
  CHECK(loaded.canonical() == desk.canonical());
  CHECK(loaded.threads == desk.threads);
  CHECK(loaded.out_dir == desk.out_dir);
}

TEST_CASE("strict parsing") {
  const auto base = profile_config(Profile::Desk);
  auto parse = [&](const std::string& text) {
    std::istringstream in(text);
    return load_config(in, base);
  };
  CHECK_THROWS_AS(parse("[model]\nhurts = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[modle]\nhurst = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse("seed = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse("[model]\nrho = -0.7x\n"), ConfigError);
  CHECK_THROWS_AS(parse("[model]\nrho = -1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("[grid]\nmaturities = 0.3, 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[grid]\nsteps = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("[model]\nhurst = 0.7\n"), ConfigError);
  CHECK_THROWS_AS(load_config(fs::path("/nonexistent/roughlv.ini"), base), ConfigError);
}

TEST_CASE("config hash tracks result-affecting fields only") {
  auto a = profile_config(Profile::Desk);
  auto b = a;
  b.threads = 8;
  b.out_dir = "elsewhere";
  CHECK(a.hash() == b.hash());
  b.seed += 1;
  CHECK(a.hash() != b.hash());
  CHECK(a.hash().size() == 16);
}

TEST_CASE("batch seeds depend on values, not positions") {
  CHECK(batch_seed(1, 0.1, 0.05) == batch_seed(1, 0.1, 0.05));
  CHECK(batch_seed(1, 0.1, 0.05) != batch_seed(1, 0.05, 0.1));
  CHECK(batch_seed(1, 0.1, 0.05) != batch_seed(2, 0.1, 0.05));
}

TEST_CASE("log-log slope") {
  const std::vector<double> x{0.05, 0.1, 0.2, 0.4};
  std::vector<double> y;
  for (double t : x) y.push_back(-0.3 * std::pow(t, -0.4));
  CHECK(loglog_slope(x, y) == doctest::Approx(-0.4).epsilon(1e-12));
}

TEST_CASE("subcommands write CSV plus manifest and rerun byte-identically") {
  std::ostringstream log;
  const auto dir1 = scratch("run1");
  const auto dir2 = scratch("run2");
  for (std::string_view sub : {"skew-ratio", "rate-function", "extrapolate", "ldp", "harmonic"}) {
    auto c1 = tiny(dir1);
    auto c2 = tiny(dir2);
    c2.threads = 2;
    CHECK(run(c1, sub, log) == 0);
    CHECK(run(c2, sub, log) == 0);
  }
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir1)) {
    ++files;
    const auto name = e.path().filename();
    CHECK(slurp(e.path()) == slurp(dir2 / name));
    if (e.path().extension() == ".csv") {
      CHECK(fs::exists(e.path().string() + ".manifest"));
      CHECK(slurp(e.path().string() + ".manifest").find("config_hash=" + tiny(dir1).hash()) != std::string::npos);
    }
    CHECK(e.path().extension() != ".partial");
  }
  CHECK(files == 12);
  const auto fig2 = slurp(dir1 / "fig2_skew_ratio.csv");
  CHECK(fig2.rfind("H,T,ratio,ci,target,defined\n", 0) == 0);
  CHECK(fig2.find(",0.625,") != std::string::npos);
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("flat-volatility rate function column") {
  std::ostringstream log;
  const auto dir = scratch("flat");
  auto c = tiny(dir);
  c.params.eta = 0.0;
  REQUIRE(run(c, "rate-function", log) == 0);
  std::ifstream in(dir / "rate_function.csv");
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string h, y, lambda;
    std::getline(row, h, ',');
    std::getline(row, y, ',');
    std::getline(row, lambda, ',');
    const double yy = std::stod(y);
    CHECK(std::abs(std::stod(lambda) - yy * yy / (2 * c.params.xi0)) < 1e-6);
    ++rows;
  }
  CHECK(rows == 6);
  fs::remove_all(dir);
}

TEST_CASE("failed runs leave no artifacts") {
  std::ostringstream log;
  const auto dir = scratch("fail");
  auto c = tiny(dir);
  c.ritz.max_iter = 1;
  CHECK_THROWS_AS(run(c, "rate-function", log), OptimizationError);
  CHECK(fs::is_empty(dir));
  CHECK_THROWS_AS(run(c, "plot", log), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("persisted batches give the same estimates as in-memory ones") {
  std::ostringstream log;
  const auto dir = scratch("persist");
  auto c = tiny(dir);
  c.hurst_values = {0.1};
  c.maturities = {0.1};
  REQUIRE(run(c, "simulate", log) == 0);
  std::ifstream in(dir / "batch_H0.1_T0.1.csv");
  const auto loaded = read_batch_csv(in);
  const auto fresh = simulate_batch(ModelParams(c.params.xi0, c.params.eta, c.params.rho, 0.1),
                                    SimulationGrid(0.1, c.steps), batch_seed(c.seed, 0.1, 0.1), c.paths);
  CHECK(local_vol_ratio(loaded, 0.02).sigma_loc == local_vol_ratio(fresh, 0.02).sigma_loc);
  CHECK(implied_skew(loaded, 0.0).value == implied_skew(fresh, 0.0).value);
  fs::remove_all(dir);
}

TEST_CASE("acceptance evaluation and its negative control") {
  AcceptanceData d;
  for (double H : {0.1, 0.3, 0.5})
    for (double t : {0.05, 0.1, 0.2, 0.3, 0.4, 0.5}) {
      SkewRatioMeasure m;
      m.H = H;
      m.t = t;
      m.skew_loc = {t, -0.3 * std::pow(t, H - 0.5), 0.001};
      m.skew_bs = {t, m.skew_loc.value / (H + 1.5), 0.001};
      m.point = skew_ratio_point(m.skew_bs, m.skew_loc, H);
      d.skews.push_back(m);
    }
  AcceptanceOptions opt;
  auto results = evaluate_acceptance(d, opt);
  REQUIRE(results.size() == 7);
  CHECK(results[0].pass);
  CHECK(results[1].pass);
  CHECK_FALSE(results[2].pass);  // no estimator pairs measured
  opt.tampered_target = 0.9;
  results = evaluate_acceptance(d, opt);
  CHECK_FALSE(results[0].pass);
  std::ostringstream table;
  write_acceptance_table(table, results);
  CHECK(table.str().rfind("criterion,name,status,measured,target,tolerance\n", 0) == 0);
}
