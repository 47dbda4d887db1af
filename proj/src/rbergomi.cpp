#include "roughlv/rbergomi.hpp"

#include <array>
#include <cmath>
#include <exception>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

namespace roughlv {

ModelParams::ModelParams(double xi0_, double eta_, double rho_, double hurst_)
    : xi0(xi0_), eta(eta_), rho(rho_), hurst(hurst_) {
  validate();
}

void ModelParams::validate() const {
  if (!(xi0 > 0.0) || !std::isfinite(xi0)) throw std::invalid_argument("xi0 must be positive");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be non-negative");
  if (!(rho > -1.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (-1, 1)");
  validate_hurst(hurst);
}

double ModelParams::rho_bar() const { return std::sqrt(1.0 - rho * rho); }

double ModelParams::spot_vol() const { return std::sqrt(xi0); }

double ModelParams::sigma(double x) const { return std::sqrt(xi0) * std::exp(0.5 * eta * x); }

ModelParams reference_params(double H) { return ModelParams(0.235 * 0.235, 1.0, -0.7, H); }

std::vector<double> variance_path(std::span<const double> w_hat, const ModelParams& params,
                                  const SimulationGrid& grid) {
  const int n = grid.steps();
  if (w_hat.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("variance_path: draw does not match the grid");
  std::vector<double> v(static_cast<std::size_t>(n) + 1);
  v[0] = params.xi0;
  const double two_h = 2.0 * params.hurst;
  const double half_eta2 = 0.5 * params.eta * params.eta;
  for (int k = 1; k <= n; ++k) {
    const double t = grid.time(k);
    v[static_cast<std::size_t>(k)] =
        params.xi0 * std::exp(params.eta * w_hat[static_cast<std::size_t>(k - 1)] -
                              half_eta2 * std::pow(t, two_h));
  }
  return v;
}

std::vector<double> variance_path(const GaussianDraw& draw, const ModelParams& params,
                                  const SimulationGrid& grid) {
  return variance_path(draw.w_hat, params, grid);
}

namespace {

// Core Euler recursion shared by the single-draw and block paths.
template <class WAt, class BarAt>
PathSample euler_core(WAt w_at, BarAt bar_at, std::span<const double> v,
                      const ModelParams& params, const SimulationGrid& grid) {
  const int n = grid.steps();
  const double dt = grid.dt();
  const double rho = params.rho;
  const double rho_bar = params.rho_bar();
  double sum_v = 0.0;
  double sum_sqrtv_dw = 0.0;
  double sum_sqrtv_dbar = 0.0;
  double w_prev = 0.0;
  for (int k = 0; k < n; ++k) {
    const double vk = v[static_cast<std::size_t>(k)];
    const double sv = std::sqrt(vk);
    const double w_next = w_at(k);
    sum_v += vk;
    sum_sqrtv_dw += sv * (w_next - w_prev);
    sum_sqrtv_dbar += sv * bar_at(k);
    w_prev = w_next;
  }
  PathSample s;
  s.int_v = dt * sum_v;
  s.int_sqrtv_dW = sum_sqrtv_dw;
  s.x_T = -0.5 * s.int_v + rho * sum_sqrtv_dw + rho_bar * sum_sqrtv_dbar;
  s.v_T = v[static_cast<std::size_t>(n)];
  return s;
}

}  // namespace

PathSample euler_logprice(const GaussianDraw& draw, std::span<const double> variance,
                          const ModelParams& params, const SimulationGrid& grid) {
  const auto n = static_cast<std::size_t>(grid.steps());
  if (draw.w.size() != n || draw.w_bar_incr.size() != n || variance.size() != n + 1)
    throw std::invalid_argument("euler_logprice: dimensions do not match the grid");
  return euler_core([&](int k) { return draw.w[static_cast<std::size_t>(k)]; },
                    [&](int k) { return draw.w_bar_incr[static_cast<std::size_t>(k)]; },
                    variance, params, grid);
}

GaussianSampler make_sampler(const SimulationGrid& grid, double H) {
  return GaussianSampler(factorize(build_covariance(grid, H)), grid);
}

PathBatch simulate_batch(const ModelParams& params, const SimulationGrid& grid,
                         std::uint64_t seed, std::size_t M, int threads) {
  params.validate();
  return simulate_batch(make_sampler(grid, params.hurst), params, seed, M, threads);
}

PathBatch simulate_batch(const GaussianSampler& sampler, const ModelParams& params,
                         std::uint64_t seed, std::size_t M, int threads) {
  params.validate();
  const SimulationGrid& grid = sampler.grid();
  PathBatch batch;
  batch.params = params;
  batch.grid = grid;
  batch.seed = seed;
  batch.samples.resize(M);
  if (M == 0) return batch;

  const int n = grid.steps();
  const std::uint64_t blocks = (M + GaussianSampler::kBlockWidth - 1) / GaussianSampler::kBlockWidth;

  // same expression as variance_path with the deterministic drift hoisted
  std::vector<double> drift(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k)
    drift[static_cast<std::size_t>(k - 1)] =
        0.5 * params.eta * params.eta * std::pow(grid.time(k), 2.0 * params.hurst);

  auto worker = [&](std::uint64_t begin, std::uint64_t end) {
    DrawBlock block;
    std::vector<double> v(static_cast<std::size_t>(n) + 1);
    v[0] = params.xi0;
    for (std::uint64_t b = begin; b < end; ++b) {
      sampler.draw_block(seed, b, M, block);
      for (std::size_t c = 0; c < block.count; ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        for (int k = 0; k < n; ++k)
          v[static_cast<std::size_t>(k) + 1] =
              params.xi0 * std::exp(params.eta * block.joint(n + k, col) - drift[static_cast<std::size_t>(k)]);
        batch.samples[block.first + c] =
            euler_core([&](int k) { return block.joint(k, col); },
                       [&](int k) { return block.bar_incr(k, col); }, v, params, grid);
      }
    }
  };

  const auto nthreads = static_cast<std::uint64_t>(std::max(1, threads));
  if (nthreads == 1 || blocks == 1) {
    worker(0, blocks);
    return batch;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(nthreads);
  const std::uint64_t per = (blocks + nthreads - 1) / nthreads;
  for (std::uint64_t t = 0; t < nthreads; ++t) {
    const std::uint64_t b0 = t * per;
    const std::uint64_t b1 = std::min(blocks, b0 + per);
    if (b0 >= b1) break;
    pool.emplace_back([&, t, b0, b1] {
      try {
        worker(b0, b1);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return batch;
}

void write_batch_csv(std::ostream& os, const PathBatch& batch) {
  os << std::setprecision(17);
  os << "# xi0=" << batch.params.xi0 << '\n'
     << "# eta=" << batch.params.eta << '\n'
     << "# rho=" << batch.params.rho << '\n'
     << "# hurst=" << batch.params.hurst << '\n'
     << "# maturity=" << batch.grid.maturity() << '\n'
     << "# steps=" << batch.grid.steps() << '\n'
     << "# seed=" << batch.seed << '\n'
     << "index,x_T,v_T,int_v,int_sqrtv_dW\n";
  for (std::size_t m = 0; m < batch.samples.size(); ++m) {
    const auto& s = batch.samples[m];
    os << m << ',' << s.x_T << ',' << s.v_T << ',' << s.int_v << ',' << s.int_sqrtv_dW << '\n';
  }
}

PathBatch read_batch_csv(std::istream& is) {
  std::map<std::string, std::string> header;
  std::string line;
  bool saw_columns = false;
  while (std::getline(is, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw std::runtime_error("batch csv: malformed header line");
      header[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (line != "index,x_T,v_T,int_v,int_sqrtv_dW")
      throw std::runtime_error("batch csv: unexpected column header '" + line + "'");
    saw_columns = true;
    break;
  }
  if (!saw_columns) throw std::runtime_error("batch csv: missing column header");
  auto need = [&](const char* key) {
    const auto it = header.find(key);
    if (it == header.end()) throw std::runtime_error(std::string("batch csv: missing header ") + key);
    return it->second;
  };
  PathBatch batch;
  batch.params = ModelParams(std::stod(need("xi0")), std::stod(need("eta")),
                             std::stod(need("rho")), std::stod(need("hurst")));
  batch.grid = SimulationGrid(std::stod(need("maturity")), std::stoi(need("steps")));
  batch.seed = std::stoull(need("seed"));
  std::size_t expected = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::array<double, 4> vals{};
    std::getline(row, cell, ',');
    if (std::stoull(cell) != expected) throw std::runtime_error("batch csv: index out of order");
    for (auto& v : vals) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error("batch csv: short row");
      v = std::stod(cell);
    }
    batch.samples.push_back({vals[0], vals[1], vals[2], vals[3]});
    ++expected;
  }
  return batch;
}

}  // namespace roughlv
