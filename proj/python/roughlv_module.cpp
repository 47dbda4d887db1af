#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "roughlv/experiments.hpp"

namespace py = pybind11;
using namespace roughlv;

namespace {

py::array_t<double> column(const PathBatch& b, double PathSample::*field) {
  py::array_t<double> out(static_cast<py::ssize_t>(b.size()));
  auto view = out.mutable_unchecked<1>();
  for (std::size_t m = 0; m < b.size(); ++m) view(static_cast<py::ssize_t>(m)) = b.samples[m].*field;
  return out;
}

}  // namespace

PYBIND11_MODULE(_roughlv, m) {
  m.doc() = "Rough Bergomi local volatility: simulation, estimators and short-time asymptotics";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<FactorizationError>(m, "FactorizationError", PyExc_RuntimeError);
  py::register_exception<DegenerateSupportError>(m, "DegenerateSupportError", PyExc_RuntimeError);
  py::register_exception<UnstableEstimateError>(m, "UnstableEstimateError", PyExc_RuntimeError);
  py::register_exception<OptimizationError>(m, "OptimizationError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<double, double, double, double>(), py::arg("xi0") = 0.235 * 0.235,
           py::arg("eta") = 1.0, py::arg("rho") = -0.7, py::arg("hurst") = 0.1)
      .def_readwrite("xi0", &ModelParams::xi0)
      .def_readwrite("eta", &ModelParams::eta)
      .def_readwrite("rho", &ModelParams::rho)
      .def_readwrite("hurst", &ModelParams::hurst)
      .def("sigma", &ModelParams::sigma)
      .def_property_readonly("spot_vol", &ModelParams::spot_vol)
      .def("__repr__", [](const ModelParams& p) {
        return "ModelParams(xi0=" + std::to_string(p.xi0) + ", eta=" + std::to_string(p.eta) +
               ", rho=" + std::to_string(p.rho) + ", hurst=" + std::to_string(p.hurst) + ")";
      });
  m.def("reference_params", &reference_params, py::arg("hurst"));

  py::class_<SimulationGrid>(m, "SimulationGrid")
      .def(py::init<double, int>(), py::arg("maturity"), py::arg("steps"))
      .def_property_readonly("maturity", &SimulationGrid::maturity)
      .def_property_readonly("steps", &SimulationGrid::steps)
      .def_property_readonly("dt", &SimulationGrid::dt)
      .def("nodes", &SimulationGrid::nodes);

  m.def("volterra_covariance", &volterra_covariance, py::arg("t"), py::arg("s"), py::arg("hurst"),
        py::arg("abs_tol") = 1e-12);
  m.def("cross_covariance", &cross_covariance, py::arg("s_w"), py::arg("t_hat"), py::arg("hurst"));
  m.def("joint_covariance", [](const SimulationGrid& g, double H) { return build_covariance(g, H).matrix; },
        py::arg("grid"), py::arg("hurst"));
  m.def("cholesky", [](const Eigen::MatrixXd& c) { return factorize(c).lower; }, py::arg("cov"));

  py::class_<PathBatch>(m, "PathBatch")
      .def("__len__", &PathBatch::size)
      .def_property_readonly("maturity", &PathBatch::maturity)
      .def_readonly("params", &PathBatch::params)
      .def_readonly("seed", &PathBatch::seed)
      .def_property_readonly("x_T", [](const PathBatch& b) { return column(b, &PathSample::x_T); })
      .def_property_readonly("v_T", [](const PathBatch& b) { return column(b, &PathSample::v_T); })
      .def_property_readonly("int_v", [](const PathBatch& b) { return column(b, &PathSample::int_v); })
      .def_property_readonly("int_sqrtv_dW",
                             [](const PathBatch& b) { return column(b, &PathSample::int_sqrtv_dW); });

  m.def("simulate_batch",
        [](const ModelParams& p, const SimulationGrid& g, std::uint64_t seed, std::size_t paths, int threads) {
          py::gil_scoped_release release;
          return simulate_batch(p, g, seed, paths, threads);
        },
        py::arg("params"), py::arg("grid"), py::arg("seed"), py::arg("paths"), py::arg("threads") = 1);

  m.def("bs_call", &bs_call, py::arg("k"), py::arg("total_vol"));
  m.def("bs_put", &bs_put, py::arg("k"), py::arg("total_vol"));
  m.def("implied_vol",
        [](double price, double k, double t, bool put) {
          return implied_vol(price, k, t, put ? OptionSide::Put : OptionSide::Call);
        },
        py::arg("price"), py::arg("k"), py::arg("t"), py::arg("put") = false);

  py::class_<ImpliedPoint>(m, "ImpliedPoint")
      .def_readonly("sigma_bs", &ImpliedPoint::sigma_bs)
      .def_readonly("ci", &ImpliedPoint::ci);
  py::class_<SkewEstimate>(m, "SkewEstimate")
      .def_readonly("t", &SkewEstimate::t)
      .def_readonly("value", &SkewEstimate::value)
      .def_readonly("ci", &SkewEstimate::ci);
  py::class_<LocalVolPoint>(m, "LocalVolPoint")
      .def_readonly("sigma_loc", &LocalVolPoint::sigma_loc)
      .def_readonly("ci", &LocalVolPoint::ci)
      .def_readonly("reliable", &LocalVolPoint::reliable);

  m.def("implied_vol_mc", py::overload_cast<const PathBatch&, double>(&implied_vol_mc), py::arg("batch"), py::arg("k"));
  m.def("implied_skew", &implied_skew, py::arg("batch"), py::arg("k") = 0.0);
  m.def("local_vol_ratio", &local_vol_ratio, py::arg("batch"), py::arg("k"));
  m.def("local_vol_kernel", py::overload_cast<const PathBatch&, double>(&local_vol_kernel),
        py::arg("batch"), py::arg("k"));
  m.def("local_skew", &local_skew, py::arg("batch"), py::arg("k") = 0.0);

  py::class_<RitzConfig>(m, "RitzConfig")
      .def(py::init<>())
      .def_readwrite("n_basis", &RitzConfig::n_basis)
      .def_readwrite("quad_nodes", &RitzConfig::quad_nodes)
      .def_readwrite("tol", &RitzConfig::tol)
      .def_readwrite("max_iter", &RitzConfig::max_iter);
  py::class_<RateSolution>(m, "RateSolution")
      .def_readonly("y", &RateSolution::y)
      .def_readonly("coeffs", &RateSolution::coeffs)
      .def_readonly("rate", &RateSolution::lambda)
      .def_readonly("h_hat_1", &RateSolution::h_hat_1)
      .def_readonly("sigma_limit", &RateSolution::sigma_limit)
      .def_readonly("chi", &RateSolution::chi);
  m.def("fourier_basis", &fourier_basis, py::arg("n"), py::arg("t"));
  m.def("minimize_rate", &minimize_rate, py::arg("y"), py::arg("params"), py::arg("config") = RitzConfig{});
  m.def("limiting_smile", &limiting_smile, py::arg("y_grid"), py::arg("params"),
        py::arg("config") = RitzConfig{}, py::arg("threads") = 1);

  py::class_<SkewConstants>(m, "SkewConstants")
      .def_readonly("k1_at_one", &SkewConstants::k1_at_one)
      .def_readonly("k1_mean", &SkewConstants::k1_mean)
      .def_readonly("ratio", &SkewConstants::ratio)
      .def_readonly("sigma_slope", &SkewConstants::sigma_slope);
  m.def("skew_constants", &skew_constants, py::arg("params"));

  m.def("skew_ratio_target", &skew_ratio_target, py::arg("hurst"));
  m.def("harmonic_mean",
        py::overload_cast<const std::function<double(double)>&, double, int>(&harmonic_mean),
        py::arg("sigma_loc"), py::arg("k"), py::arg("nodes") = 64);
  m.def("extrapolate_local_vol",
        [](const std::vector<RateSolution>& smile, double H, double T, double k) {
          return extrapolate_local_vol(smile, H, T, k);
        },
        py::arg("smile"), py::arg("hurst"), py::arg("T"), py::arg("k"));

  m.attr("__version__") = version_string();
}
