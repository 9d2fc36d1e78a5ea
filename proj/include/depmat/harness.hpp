#pragma once

// Experiment engine: Monte Carlo coverage of the deviation bounds, rate and
// dimension sweeps, JSON configuration and CSV/JSON result files.

#include "depmat/bounds.hpp"
#include "depmat/estimators.hpp"
#include "depmat/procgen.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace depmat {

/// Dimension-free description of a process; build(p) instantiates it.
struct ProcessRecipe {
  enum class Latent { cbs, var };
  enum class Transition { scaled_identity, scaled_rotation, matrix };

  Latent latent = Latent::cbs;
  CoeffFamily coeffs = GeometricCoeffs{0.5, 0.5};
  /// Empty means "unit covariance": B_xi = sqrt(3p), so Cov(xi) = I for the
  /// isotropic spectrum.
  std::optional<double> innovation_bound = 1.0;
  Spectrum spectrum;
  double horizon_tol = 1e-10;

  Transition transition = Transition::scaled_identity;
  double transition_scale = 0.5;
  Eigen::MatrixXd transition_matrix;

  NoiseSpec::Law noise = BoundedNoise{0.0};
  /// Bounded noise only: lambda = sqrt(p), so Cov(eps) = I.
  bool noise_unit_covariance = false;

  ProcessSpec build(Index p) const;
};

enum class EstimatorKind { empirical, truncated, covariance, lagged, hmm, regression };
enum class BoundRegime { automatic, bounded, composite };

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::covariance;
  std::optional<double> tau;  // truncated only; empty = select_tau
  bool center = false;
};

struct BoundConfig {
  BoundRegime regime = BoundRegime::automatic;
  double t = 3.0;
  std::optional<double> tau;  // empty = select_tau
};

struct RegressionConfig {
  double theta_norm = 1.0;
  double noise_variance = 0.25;
  double c = 2.0;
};

struct ExperimentConfig {
  ProcessRecipe process;
  EstimatorConfig estimator;
  BoundConfig bound;
  RegressionConfig regression;
  std::size_t trials = 100;
  std::vector<std::size_t> n_grid{500};
  Index p = 10;
  std::vector<Index> p_grid;
  std::uint64_t master_seed = 0;
  std::string output_path;

  void validate() const;
};

/// Parses the JSON configuration; unknown keys and malformed values raise
/// ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

std::string process_to_json(const ProcessSpec& spec);
ProcessSpec process_from_json(std::string_view json_text);

std::string report_to_json(const BoundReport& report);
BoundReport report_from_json(std::string_view json_text);

/// Everything the oracle knows about one (config, n, p) cell.
struct OracleContext {
  ProcessSpec spec;
  PopulationMoments moments;
  DependenceProfile gamma;
  TailModel tail;
  BoundInput input;
  std::size_t n = 0;
};

OracleContext make_oracle(const ExperimentConfig& config, std::size_t n, Index p);

/// Oracle-mode bound for the configured estimator. For regression the
/// variance term uses `trace_c` (0 when unknown).
BoundReport oracle_bound(const OracleContext& oracle, const ExperimentConfig& config, double trace_c = 0.0);

struct TrialOutcome {
  double deviation = 0.0;
  /// Set when the bound depends on the realised sample (regression).
  std::optional<double> bound;
};

/// Simulates one sample with `seed`, applies the estimator and measures its
/// error against the oracle truth (operator norm; excess risk for regression).
TrialOutcome run_trial(const OracleContext& oracle, const ExperimentConfig& config, std::uint64_t seed);

struct CoverageRow {
  std::size_t trial = 0;
  std::size_t n = 0;
  Index p = 0;
  double deviation = 0.0;
  double bound = 0.0;
  bool covered = false;
};

struct CoverageReport {
  std::size_t n = 0;
  Index p = 0;
  std::vector<double> per_trial_deviation;
  std::vector<double> per_trial_bound;
  BoundReport bound;
  double bound_value = 0.0;
  double nominal_coverage = 0.0;
  double empirical_coverage = 0.0;
  std::pair<double, double> wilson_interval{0.0, 1.0};

  std::vector<CoverageRow> rows() const;
};

/// 95% Wilson score interval for k successes in m trials.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials);

/// One report per entry of n_grid. Trial i uses seed split_seed(master, i).
/// Throws VacuousBoundError when the bound's failure probability is 1.
std::vector<CoverageReport> run_coverage(const ExperimentConfig& config);

struct RatePoint {
  std::size_t n = 0;
  double median_deviation = 0.0;
  double bound_value = 0.0;
};

struct RateSweep {
  std::vector<RatePoint> points;
  double slope = 0.0;
  double slope_std_error = 0.0;
};

/// Median deviation across trials for each n; least-squares slope of
/// log(median) on log(n). Needs at least four grid points.
RateSweep run_rate_sweep(const ExperimentConfig& config);

struct DimensionPoint {
  Index p = 0;
  double median_deviation = 0.0;
  double bound_value = 0.0;
};

struct DimensionSweep {
  std::size_t n = 0;
  std::vector<DimensionPoint> points;
  /// max / min of the median deviations
  double deviation_ratio = 1.0;
};

/// Median deviation for each p in p_grid at n = n_grid.front().
DimensionSweep run_dimension_sweep(const ExperimentConfig& config);

double median(std::vector<double> values);

std::string coverage_csv(const std::vector<CoverageReport>& reports);
std::vector<CoverageRow> parse_coverage_csv(std::string_view text);
std::string coverage_summary_json(const std::vector<CoverageReport>& reports);
std::string rate_sweep_json(const RateSweep& sweep);
std::string dimension_sweep_json(const DimensionSweep& sweep);

/// Worker count: DEPMAT_THREADS when set, else hardware concurrency.
unsigned worker_count();

}  // namespace depmat
