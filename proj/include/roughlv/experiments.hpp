#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roughlv/asymptotics.hpp"

namespace roughlv {

enum class Profile { Desk, Paper, Smoke };

Profile parse_profile(std::string_view name);
std::string_view to_string(Profile p);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  ModelParams params;                  ///< hurst here is ignored; see hurst_values
  std::vector<double> hurst_values{0.1, 0.3, 0.5};
  std::vector<double> maturities{0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> strikes{-0.2, -0.15, -0.1, -0.05, 0.0, 0.05, 0.1};
  std::vector<double> y_grid{-0.3, -0.25, -0.2, -0.15, -0.1, -0.05,
                             0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  std::size_t paths = 200000;
  int steps = 256;
  std::uint64_t seed = 20190801;
  int threads = 1;
  double bandwidth = 0.0;  ///< kernel delta; 0 selects Silverman's rule
  RitzConfig ritz;
  DupireSteps dupire;
  std::filesystem::path out_dir = "out";

  /// Throws ConfigError on any inconsistent field.
  void validate() const;
  /// Canonical key=value text of every result-affecting field.
  std::string canonical() const;
  /// FNV-1a of canonical(), hex.
  std::string hash() const;
};

ExperimentConfig profile_config(Profile p);

/// INI overlay on top of `base`: sections [model] [grid] [estimators] [ritz] [run].
/// Unknown sections or keys, malformed numbers and invalid results all throw ConfigError.
ExperimentConfig load_config(std::istream& is, ExperimentConfig base);
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base);

/// Independent batch seed for (H, T), keyed on the values rather than list position.
std::uint64_t batch_seed(std::uint64_t seed, double H, double T);

std::string version_string();

inline constexpr std::string_view kSubcommands[] = {
    "simulate", "smile", "skew-term", "skew-ratio", "rescaled-smile",
    "rate-function", "harmonic", "ldp", "extrapolate", "acceptance"};

/// Runs one subcommand and writes its CSV artifacts (each with a .manifest
/// sidecar) into config.out_dir.  Nothing is left behind on failure.
/// Returns the process exit status; failures other than a failed acceptance
/// criterion propagate as exceptions.
int run(const ExperimentConfig& config, std::string_view subcommand, std::ostream& log);

// Acceptance suite.

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string measured;
  std::string target;
  std::string tolerance;
};

struct SkewRatioMeasure {
  double H = 0.0;
  double t = 0.0;
  SkewRatioPoint point;
  SkewEstimate skew_bs;
  SkewEstimate skew_loc;
};

struct EstimatorPair {
  double H = 0.0;
  double t = 0.0;
  double k = 0.0;
  LocalVolPoint kernel;
  LocalVolPoint ratio;
};

struct SmileError {
  double H = 0.0;
  double t = 0.0;
  double max_error = 0.0;
};

struct DeterministicChecks {
  double implied_roundtrip = 0.0;  ///< max |sigma - implied_vol(price(sigma))|
  double cholesky_roundtrip = 0.0; ///< max |L L^T - C| / max diag, over H
  double variance_zscore = 0.0;    ///< max |Var(W^_t) - t^2H| / SE over nodes and H
  double basis_orthonormality = 0.0;
  bool reruns_identical = false;
};

struct AnalyticChecks {
  double eta0_error = 0.0;           ///< max |Lambda - y^2/(2 xi0)|
  double k1_identity_error = 0.0;    ///< max |K1(1) - (H+3/2)<K1,1>|
  double ritz_violation = 0.0;       ///< max of Lambda_{finer} - Lambda_{coarser}
};

/// Everything the seven criteria are evaluated on.
struct AcceptanceData {
  std::vector<SkewRatioMeasure> skews;  ///< every (H, T) of the desk grid
  std::vector<EstimatorPair> estimator_pairs;
  std::vector<SmileError> smile_errors;
  std::vector<HarmonicPoint> harmonic;  ///< T = 0.05, k = -0.15, per H
  std::vector<double> harmonic_hurst;
  AnalyticChecks analytic;
  DeterministicChecks deterministic;
};

struct AcceptanceOptions {
  std::size_t paths = 200000;
  int steps = 256;
  std::uint64_t seed = 20190801;
  int threads = 1;
  /// Replaces 1/(H+3/2) for H = 0.1 in criterion 1 (negative control).
  std::optional<double> tampered_target;
};

AcceptanceData collect_acceptance_data(const AcceptanceOptions& options, std::ostream* log = nullptr);
std::vector<CriterionResult> evaluate_acceptance(const AcceptanceData& data,
                                                 const AcceptanceOptions& options);
void write_acceptance_table(std::ostream& os, const std::vector<CriterionResult>& results);

/// Least-squares slope of log|y| on log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace roughlv
