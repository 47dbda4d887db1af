#include "roughlv/rate_function.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <thread>

#include "roughlv/quadrature.hpp"

namespace roughlv {

void RitzConfig::validate() const {
  if (n_basis < 1) throw std::invalid_argument("Ritz basis size must be >= 1");
  if (quad_nodes < 16 || quad_nodes % 16 != 0)
    throw std::invalid_argument("Ritz quadrature nodes must be a positive multiple of 16");
  if (!(tol > 0.0)) throw std::invalid_argument("Ritz tolerance must be positive");
  if (max_iter < 1) throw std::invalid_argument("Ritz iteration cap must be >= 1");
}

double fourier_basis(int n, double t) {
  if (n < 1) throw std::invalid_argument("fourier_basis: index starts at 1");
  if (n == 1) return 1.0;
  const int freq = n / 2;
  const double arg = 2.0 * std::numbers::pi * freq * t;
  return std::numbers::sqrt2 * (n % 2 == 0 ? std::cos(arg) : std::sin(arg));
}

double hat_transform(std::span<const double> coeffs, double t, double H) {
  validate_hurst(H);
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("hat_transform: t must lie in [0, 1]");
  if (t == 0.0 || coeffs.empty()) return 0.0;
  auto h_dot = [&](double s) {
    double v = 0.0;
    for (std::size_t n = 0; n < coeffs.size(); ++n)
      v += coeffs[n] * fourier_basis(static_cast<int>(n) + 1, s);
    return v;
  };
  // s = t - v^{1/(H+1/2)} removes the (t-s)^{H-1/2} singularity.
  const double a = H + 0.5;
  const double p = 1.0 / a;
  const double scale = std::sqrt(2.0 * H) / a;
  auto integrand = [&](double v) { return h_dot(t - std::pow(v, p)); };
  return scale * integrate_adaptive(integrand, 0.0, std::pow(t, a), 1e-13);
}

RateFunction::RateFunction(const ModelParams& params, const RitzConfig& config)
    : params_(params), config_(config) {
  params_.validate();
  config_.validate();
  const auto rule = composite_unit_rule(config_.quad_nodes);
  weights_ = rule.weights;
  const auto nb = static_cast<std::size_t>(config_.n_basis);
  const std::size_t nq = rule.nodes.size();
  basis_.resize(nq * nb);
  hat_basis_.resize(nq * nb);
  hat_one_.resize(nb);
  std::vector<double> unit(nb, 0.0);
  for (std::size_t n = 0; n < nb; ++n) {
    std::fill(unit.begin(), unit.end(), 0.0);
    unit[n] = 1.0;
    for (std::size_t q = 0; q < nq; ++q) {
      basis_[q * nb + n] = fourier_basis(static_cast<int>(n) + 1, rule.nodes[q]);
      hat_basis_[q * nb + n] = hat_transform(unit, rule.nodes[q], params_.hurst);
    }
    hat_one_[n] = hat_transform(unit, 1.0, params_.hurst);
  }
}

double RateFunction::hat_at_one(std::span<const double> coeffs) const {
  return std::inner_product(coeffs.begin(), coeffs.end(), hat_one_.begin(), 0.0);
}

double RateFunction::objective(std::span<const double> coeffs, double y) const {
  const auto nb = static_cast<std::size_t>(config_.n_basis);
  if (coeffs.size() != nb) throw std::invalid_argument("objective: wrong number of coefficients");
  double f = 0.0;
  double g = 0.0;
  for (std::size_t q = 0; q < weights_.size(); ++q) {
    double h_hat = 0.0;
    double h_dot = 0.0;
    for (std::size_t n = 0; n < nb; ++n) {
      h_hat += coeffs[n] * hat_basis_[q * nb + n];
      h_dot += coeffs[n] * basis_[q * nb + n];
    }
    const double sig = params_.sigma(h_hat);
    f += weights_[q] * sig * sig;
    g += weights_[q] * sig * h_dot;
  }
  if (!(f > 0.0)) throw std::domain_error("objective: F(h) must be positive");
  const double energy = 0.5 * std::inner_product(coeffs.begin(), coeffs.end(), coeffs.begin(), 0.0);
  const double rho = params_.rho;
  const double rho_bar2 = 1.0 - rho * rho;
  const double gap = y - rho * g;
  return gap * gap / (2.0 * rho_bar2 * f) + energy;
}

namespace {

struct BfgsResult {
  std::vector<double> x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

template <class F>
std::vector<double> central_gradient(F& f, const std::vector<double>& x) {
  constexpr double h = 1e-6;
  std::vector<double> g(x.size());
  std::vector<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Quasi-Newton (BFGS inverse-Hessian update) with Armijo backtracking.
template <class F>
BfgsResult bfgs(F& f, std::vector<double> x, double tol, int max_iter) {
  const std::size_t n = x.size();
  std::vector<double> hinv(n * n, 0.0);
  auto reset = [&] {
    std::fill(hinv.begin(), hinv.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = 1.0;
  };
  reset();
  double fx = f(x);
  auto g = central_gradient(f, x);
  BfgsResult r;
  std::vector<double> p(n), xn(n), s(n), yv(n), hy(n);
  for (int it = 0; it < max_iter; ++it) {
    r.iterations = it;
    if (inf_norm(g) < tol) {
      r.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = 0.0;
      for (std::size_t j = 0; j < n; ++j) p[i] -= hinv[i * n + j] * g[j];
    }
    double slope = std::inner_product(g.begin(), g.end(), p.begin(), 0.0);
    if (!(slope < 0.0)) {
      reset();
      for (std::size_t i = 0; i < n; ++i) p[i] = -g[i];
      slope = -std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
    }
    double step = 1.0;
    double fn = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + step * p[i];
      fn = f(xn);
      if (fn <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const auto gn = central_gradient(f, xn);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xn[i] - x[i];
      yv[i] = gn[i] - g[i];
    }
    const double sy = std::inner_product(s.begin(), s.end(), yv.begin(), 0.0);
    if (sy > 1e-300) {
      for (std::size_t i = 0; i < n; ++i) {
        hy[i] = 0.0;
        for (std::size_t j = 0; j < n; ++j) hy[i] += hinv[i * n + j] * yv[j];
      }
      const double yhy = std::inner_product(yv.begin(), yv.end(), hy.begin(), 0.0);
      const double c1 = (sy + yhy) / (sy * sy);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          hinv[i * n + j] += c1 * s[i] * s[j] - (hy[i] * s[j] + s[i] * hy[j]) / sy;
    }
    const double improvement = fx - fn;
    x = xn;
    fx = fn;
    g = gn;
    if (improvement < 1e-12 && inf_norm(g) < tol) {
      r.converged = true;
      r.iterations = it + 1;
      break;
    }
  }
  r.x = std::move(x);
  r.value = fx;
  r.grad_norm = inf_norm(g);
  if (!r.converged && r.grad_norm < tol) r.converged = true;
  return r;
}

}  // namespace

RateSolution RateFunction::finish(double y, std::vector<double> coeffs, double value,
                                  int iterations) const {
  RateSolution s;
  s.y = y;
  s.lambda = value;
  s.h_hat_1 = hat_at_one(coeffs);
  s.sigma_limit = params_.sigma(s.h_hat_1);
  s.chi = y == 0.0 ? params_.spot_vol() : std::abs(y) / std::sqrt(2.0 * value);
  s.coeffs = std::move(coeffs);
  s.iterations = iterations;
  return s;
}

RateSolution RateFunction::minimize_from(double y, std::span<const double> start) const {
  const auto nb = static_cast<std::size_t>(config_.n_basis);
  if (start.size() != nb) throw std::invalid_argument("minimize: start has the wrong dimension");
  auto f = [&](const std::vector<double>& a) { return objective(a, y); };
  auto r = bfgs(f, std::vector<double>(start.begin(), start.end()), config_.tol, config_.max_iter);
  if (!r.converged) {
    throw OptimizationError("rate function minimization did not converge (gradient norm " +
                                std::to_string(r.grad_norm) + ")",
                            r.x);
  }
  return finish(y, std::move(r.x), r.value, r.iterations);
}

RateSolution RateFunction::minimize(double y) const {
  const auto nb = static_cast<std::size_t>(config_.n_basis);
  std::vector<double> zero(nb, 0.0);
  if (y == 0.0) return finish(0.0, zero, objective(zero, 0.0), 0);

  std::vector<double> tilted(nb, 0.0);
  tilted[0] = params_.rho * y / params_.spot_vol();

  std::optional<RateSolution> best;
  std::optional<OptimizationError> last_error;
  for (const auto* start : {&zero, &tilted}) {
    try {
      auto sol = minimize_from(y, *start);
      if (!best || sol.lambda < best->lambda) best = std::move(sol);
    } catch (const OptimizationError& e) {
      last_error = e;
    }
  }
  if (!best) throw *last_error;
  return *best;
}

double objective(std::span<const double> coeffs, double y, const ModelParams& params,
                 const RitzConfig& config) {
  RitzConfig c = config;
  c.n_basis = static_cast<int>(coeffs.size());
  return RateFunction(params, c).objective(coeffs, y);
}

RateSolution minimize_rate(double y, const ModelParams& params, const RitzConfig& config) {
  return RateFunction(params, config).minimize(y);
}

std::vector<RateSolution> limiting_smile(std::vector<double> y_grid, const ModelParams& params,
                                         const RitzConfig& config, int threads) {
  std::sort(y_grid.begin(), y_grid.end());
  y_grid.erase(std::unique(y_grid.begin(), y_grid.end()), y_grid.end());
  std::vector<RateSolution> out(y_grid.size());
  if (y_grid.empty()) return out;
  const RateFunction rf(params, config);

  if (threads > 1) {
    std::vector<std::thread> pool;
    const auto nt = static_cast<std::size_t>(threads);
    std::vector<std::exception_ptr> errors(nt);
    for (std::size_t w = 0; w < nt; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < y_grid.size(); i += nt) out[i] = rf.minimize(y_grid[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    return out;
  }

  std::size_t centre = 0;
  for (std::size_t i = 1; i < y_grid.size(); ++i)
    if (std::abs(y_grid[i]) < std::abs(y_grid[centre])) centre = i;
  out[centre] = rf.minimize(y_grid[centre]);
  for (std::size_t i = centre + 1; i < y_grid.size(); ++i)
    out[i] = rf.minimize_from(y_grid[i], out[i - 1].coeffs);
  for (std::size_t i = centre; i-- > 0;) out[i] = rf.minimize_from(y_grid[i], out[i + 1].coeffs);
  return out;
}

SkewConstants skew_constants(const ModelParams& params) {
  params.validate();
  const double H = params.hurst;
  const std::vector<double> unit{1.0};
  auto k1 = [&](double t) { return hat_transform(unit, t, H); };
  SkewConstants c;
  c.k1_at_one = k1(1.0);
  c.k1_mean = integrate_adaptive(k1, 0.0, 1.0, 1e-13);
  c.ratio = c.k1_at_one / c.k1_mean;
  c.sigma_slope = 0.5 * params.eta * params.rho * c.k1_at_one;
  return c;
}

}  // namespace roughlv
