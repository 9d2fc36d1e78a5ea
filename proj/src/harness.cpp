#include "depmat/harness.hpp"

#include "depmat/errors.hpp"
#include "depmat/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace depmat {

namespace {

constexpr double kWilsonZ = 1.959963984540054;

bool bounded_regime(const ExperimentConfig& config, const ProcessSpec& spec) {
  switch (config.estimator.kind) {
    case EstimatorKind::lagged:
    case EstimatorKind::hmm:
    case EstimatorKind::regression:
      if (config.bound.regime == BoundRegime::bounded)
        throw ConfigError("bound.regime: 'bounded' is not available for this estimator");
      return false;
    default:
      break;
  }
  if (config.bound.regime == BoundRegime::composite) return false;
  if (config.bound.regime == BoundRegime::bounded && !spec.noise.is_bounded())
    throw ConfigError("bound.regime: 'bounded' requires bounded noise");
  return spec.noise.is_bounded();
}

std::optional<double> configured_tau(const ExperimentConfig& config) {
  if (config.estimator.kind == EstimatorKind::truncated && config.estimator.tau) return config.estimator.tau;
  return config.bound.tau;
}

SymMatrix augmented_truth(const PopulationMoments& m) {
  const Index p = m.sigma.dim();
  Eigen::MatrixXd s(2 * p, 2 * p);
  s.topLeftCorner(p, p) = m.sigma.matrix();
  s.bottomRightCorner(p, p) = m.sigma.matrix();
  s.bottomLeftCorner(p, p) = m.lag1;
  s.topRightCorner(p, p) = m.lag1.transpose();
  return SymMatrix(s);
}

Eigen::VectorXd regression_truth(const ExperimentConfig& config, Index p) {
  return Eigen::VectorXd::Constant(p, config.regression.theta_norm / std::sqrt(static_cast<double>(p)));
}

SymMatrix noise_covariance(const NoiseSpec& noise) {
  return SymMatrix::identity(noise.dim) *= noise.second_moment() / static_cast<double>(noise.dim);
}

std::vector<TrialOutcome> run_trials(const OracleContext& oracle, const ExperimentConfig& config) {
  const std::size_t trials = config.trials;
  std::vector<TrialOutcome> out(trials);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), trials));

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::size_t failed_trial = trials;
  std::exception_ptr failure;

  auto work = [&] {
    for (std::size_t i = next++; i < trials; i = next++) {
      try {
        out[i] = run_trial(oracle, config, split_seed(config.master_seed, i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        // Report the lowest failing trial so the error is schedule-independent.
        if (i < failed_trial) {
          failed_trial = i;
          failure = std::current_exception();
        }
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json report_json(const CoverageReport& r) {
  return {{"n", r.n},
          {"p", r.p},
          {"bound", nlohmann::json::parse(report_to_json(r.bound))},
          {"bound_value", r.bound_value},
          {"nominal_coverage", r.nominal_coverage},
          {"empirical_coverage", r.empirical_coverage},
          {"wilson_interval", {r.wilson_interval.first, r.wilson_interval.second}},
          {"per_trial_deviation", r.per_trial_deviation},
          {"per_trial_bound", r.per_trial_bound}};
}

}  // namespace

OracleContext make_oracle(const ExperimentConfig& config, std::size_t n, Index p) {
  if (n < 1) throw ConfigError("n must be >= 1");
  if (config.estimator.kind == EstimatorKind::lagged && n < 2) throw ConfigError("lagged estimator needs n >= 2");
  OracleContext o;
  o.spec = config.process.build(p);
  o.spec.validate();
  o.n = n;
  o.moments = population_moments(o.spec);
  o.gamma = gamma_profile(o.spec, n);
  if (bounded_regime(config, o.spec)) {
    const double b = o.spec.envelope() + std::get<BoundedNoise>(o.spec.noise.law).lambda;
    o.tail.regime = BoundedTail{b * b};
    o.tail.moment_bound = b * b;
    o.tail.moment_note = "||Y||^2 <= (B + lambda)^2 surely";
  } else {
    o.tail = tail_model(o.spec);
  }
  o.input.sigma_norm = o.moments.sigma_norm;
  o.input.eff_rank = o.moments.eff_rank;
  o.input.gamma_n = o.gamma.max;
  o.input.n = n;
  o.input.t = config.bound.t;
  o.input.tail = o.tail;
  o.input.tau = configured_tau(config);
  o.input.oracle = true;
  return o;
}

BoundReport oracle_bound(const OracleContext& oracle, const ExperimentConfig& config, double trace_c) {
  const BoundInput& in = oracle.input;
  const bool bounded = std::holds_alternative<BoundedTail>(in.tail.regime);
  switch (config.estimator.kind) {
    case EstimatorKind::empirical:
    case EstimatorKind::covariance:
      return bounded ? bound_bounded(in) : bound_covariance(in);
    case EstimatorKind::truncated:
      return bound_truncated(in);
    case EstimatorKind::lagged: {
      BoundInput lagged = in;
      // Both halves of the augmented vector carry their own dependence.
      lagged.gamma_n = 2.0 * oracle.gamma.max;
      const SymMatrix truth = augmented_truth(oracle.moments);
      const double s01 = operator_norm(truth);
      const double r01 = lagged_effective_rank(in.sigma_norm, in.eff_rank, s01);
      return bound_lagged(lagged, s01, r01, spectral_norm(oracle.moments.lag1)).joint;
    }
    case EstimatorKind::hmm:
      return bound_hmm(in, spectral_norm(oracle.moments.lag1));
    case EstimatorKind::regression: {
      RegressionBoundParams params;
      params.theta_norm = config.regression.theta_norm;
      params.c = config.regression.c;
      params.noise_variance = config.regression.noise_variance;
      params.trace_c = trace_c;
      return bound_regression(in, params);
    }
  }
  throw ConfigError("unknown estimator");
}

TrialOutcome run_trial(const OracleContext& oracle, const ExperimentConfig& config, std::uint64_t seed) {
  const std::size_t n = oracle.n;
  const SymMatrix& sigma = oracle.moments.sigma;
  TrialOutcome out;
  switch (config.estimator.kind) {
    case EstimatorKind::empirical: {
      const Path y = simulate_observations(oracle.spec, n, seed);
      out.deviation = operator_norm(empirical_mean(MatrixSample::outer_products(y)) -= sigma);
      break;
    }
    case EstimatorKind::covariance: {
      const Path y = simulate_observations(oracle.spec, n, seed);
      out.deviation = operator_norm(covariance_estimator(y, config.estimator.center) -= sigma);
      break;
    }
    case EstimatorKind::truncated: {
      const double tau = oracle.input.tau ? *oracle.input.tau
                                          : select_tau(oracle.tail, static_cast<double>(n), oracle.input.t);
      const Path y = simulate_observations(oracle.spec, n, seed);
      out.deviation = operator_norm(truncated_mean(MatrixSample::outer_products(y), tau) -= sigma);
      break;
    }
    case EstimatorKind::lagged: {
      const Path y = simulate_observations(oracle.spec, n, seed);
      const LaggedCovariance lc = lagged_covariance(y);
      out.deviation = operator_norm(SymMatrix(lc.augmented) -= augmented_truth(oracle.moments));
      break;
    }
    case EstimatorKind::hmm: {
      const auto& var = std::get<VarSpec>(oracle.spec.latent);
      const Path y = simulate_observations(oracle.spec, n + 1, seed);
      const HmmTruth truth{var.transition, sigma, oracle.moments.lag1, noise_covariance(oracle.spec.noise)};
      const HmmEstimate est = hmm_estimate(y, truth);
      out.deviation = est.versus_planted->error;
      break;
    }
    case EstimatorKind::regression: {
      const Index p = oracle.spec.dim();
      RegressionData data;
      data.covariates = simulate_observations(oracle.spec, n, seed);
      const Eigen::VectorXd theta_star = regression_truth(config, p);
      Rng rng(split_seed(seed, 2));
      const double sd = std::sqrt(config.regression.noise_variance);
      data.responses = data.covariates * theta_star;
      for (Index i = 0; i < data.responses.size(); ++i) data.responses(i) += sd * rng.normal();
      data.noise_variance = config.regression.noise_variance;
      data.truth = theta_star;
      const RegressionFit fit = min_norm_regression(data);
      out.deviation = excess_risk(fit.theta, theta_star, sigma);
      out.bound = oracle_bound(oracle, config, regression_variance_trace(data.covariates, sigma)).bound_value;
      break;
    }
  }
  return out;
}

std::vector<CoverageRow> CoverageReport::rows() const {
  std::vector<CoverageRow> out;
  out.reserve(per_trial_deviation.size());
  for (std::size_t i = 0; i < per_trial_deviation.size(); ++i) {
    const double b = i < per_trial_bound.size() ? per_trial_bound[i] : bound_value;
    out.push_back({i, n, p, per_trial_deviation[i], b, per_trial_deviation[i] <= b});
  }
  return out;
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials) {
  if (trials == 0) return {0.0, 1.0};
  if (successes > trials) throw DomainError("wilson_interval: successes exceed trials");
  const double m = static_cast<double>(trials);
  const double k = static_cast<double>(successes);
  const double z2 = kWilsonZ * kWilsonZ;
  const double denom = m + z2;
  const double center = (k + 0.5 * z2) / denom;
  const double half = kWilsonZ / denom * std::sqrt(k * (m - k) / m + 0.25 * z2);
  // The endpoints are exactly 0 and 1 at k = 0 and k = m; avoid rounding there.
  return {successes == 0 ? 0.0 : std::max(0.0, center - half), successes == trials ? 1.0 : std::min(1.0, center + half)};
}

std::vector<CoverageReport> run_coverage(const ExperimentConfig& config) {
  config.validate();
  std::vector<CoverageReport> reports;
  for (std::size_t n : config.n_grid) {
    const OracleContext oracle = make_oracle(config, n, config.p);
    CoverageReport rep;
    rep.n = n;
    rep.p = config.p;
    rep.bound = oracle_bound(oracle, config);
    if (rep.bound.vacuous) {
      std::ostringstream os;
      os << "refusing coverage run at n = " << n << ": failure probability " << rep.bound.failure_prob
         << " leaves nothing to certify (raise n or t, or set tau above the envelope)";
      throw VacuousBoundError(os.str());
    }
    rep.bound_value = rep.bound.bound_value;
    rep.nominal_coverage = 1.0 - rep.bound.failure_prob;

    const std::vector<TrialOutcome> outcomes = run_trials(oracle, config);
    std::size_t covered = 0;
    for (const TrialOutcome& o : outcomes) {
      const double b = o.bound.value_or(rep.bound_value);
      rep.per_trial_deviation.push_back(o.deviation);
      rep.per_trial_bound.push_back(b);
      covered += o.deviation <= b ? 1 : 0;
    }
    rep.empirical_coverage = static_cast<double>(covered) / static_cast<double>(outcomes.size());
    rep.wilson_interval = wilson_interval(covered, outcomes.size());
    reports.push_back(std::move(rep));
  }
  return reports;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of an empty list");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

namespace {

double median_deviation(const OracleContext& oracle, const ExperimentConfig& config) {
  std::vector<double> d;
  for (const TrialOutcome& o : run_trials(oracle, config)) d.push_back(o.deviation);
  return median(std::move(d));
}

// Bound values in sweeps are informational; a vacuous or out-of-range bound
// is recorded as NaN rather than aborting the sweep.
double sweep_bound(const OracleContext& oracle, const ExperimentConfig& config) {
  try {
    return oracle_bound(oracle, config).bound_value;
  } catch (const DomainError&) {
    return std::nan("");
  }
}

}  // namespace

RateSweep run_rate_sweep(const ExperimentConfig& config) {
  config.validate();
  if (config.n_grid.size() < 4) throw ConfigError("rate sweep: n_grid needs at least 4 sample sizes");
  RateSweep sweep;
  for (std::size_t n : config.n_grid) {
    const OracleContext oracle = make_oracle(config, n, config.p);
    sweep.points.push_back({n, median_deviation(oracle, config), sweep_bound(oracle, config)});
  }
  const std::size_t m = sweep.points.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> xs, ys;
  for (const RatePoint& pt : sweep.points) {
    xs.push_back(std::log(static_cast<double>(pt.n)));
    ys.push_back(std::log(pt.median_deviation));
    mx += xs.back();
    my += ys.back();
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  sweep.slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = ys[i] - my - sweep.slope * (xs[i] - mx);
    ssr += r * r;
  }
  sweep.slope_std_error = std::sqrt(ssr / static_cast<double>(m - 2) / sxx);
  return sweep;
}

DimensionSweep run_dimension_sweep(const ExperimentConfig& config) {
  config.validate();
  DimensionSweep sweep;
  sweep.n = config.n_grid.front();
  const std::vector<Index> grid = config.p_grid.empty() ? std::vector<Index>{config.p} : config.p_grid;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Index p : grid) {
    const OracleContext oracle = make_oracle(config, sweep.n, p);
    const DimensionPoint pt{p, median_deviation(oracle, config), sweep_bound(oracle, config)};
    lo = std::min(lo, pt.median_deviation);
    hi = std::max(hi, pt.median_deviation);
    sweep.points.push_back(pt);
  }
  sweep.deviation_ratio = hi / lo;
  return sweep;
}

std::string coverage_csv(const std::vector<CoverageReport>& reports) {
  std::string out = "trial,n,p,deviation,bound,covered\n";
  for (const CoverageReport& rep : reports)
    for (const CoverageRow& row : rep.rows()) {
      out += std::to_string(row.trial) + ',' + std::to_string(row.n) + ',' + std::to_string(row.p) + ',' +
             format_double(row.deviation) + ',' + format_double(row.bound) + ',' + (row.covered ? "1" : "0") + '\n';
    }
  return out;
}

std::vector<CoverageRow> parse_coverage_csv(std::string_view text) {
  std::vector<CoverageRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "trial,n,p,deviation,bound,covered")
    throw ConfigError("coverage csv: missing or unexpected header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 6) throw ConfigError("coverage csv: line " + std::to_string(lineno) + " needs 6 fields");
    try {
      CoverageRow r;
      r.trial = std::stoull(cells[0]);
      r.n = std::stoull(cells[1]);
      r.p = static_cast<Index>(std::stoll(cells[2]));
      r.deviation = std::strtod(cells[3].c_str(), nullptr);
      r.bound = std::strtod(cells[4].c_str(), nullptr);
      if (cells[5] != "0" && cells[5] != "1") throw std::invalid_argument("covered");
      r.covered = cells[5] == "1";
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw ConfigError("coverage csv: malformed line " + std::to_string(lineno));
    }
  }
  return rows;
}

std::string coverage_summary_json(const std::vector<CoverageReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const CoverageReport& r : reports) arr.push_back(report_json(r));
  return arr.dump(2);
}

std::string rate_sweep_json(const RateSweep& sweep) {
  nlohmann::json pts = nlohmann::json::array();
  for (const RatePoint& p : sweep.points)
    pts.push_back({{"n", p.n}, {"median_deviation", p.median_deviation}, {"bound_value", p.bound_value}});
  return nlohmann::json{{"points", pts}, {"slope", sweep.slope}, {"slope_std_error", sweep.slope_std_error}}.dump(2);
}

std::string dimension_sweep_json(const DimensionSweep& sweep) {
  nlohmann::json pts = nlohmann::json::array();
  for (const DimensionPoint& p : sweep.points)
    pts.push_back({{"p", p.p}, {"median_deviation", p.median_deviation}, {"bound_value", p.bound_value}});
  return nlohmann::json{{"n", sweep.n}, {"points", pts}, {"deviation_ratio", sweep.deviation_ratio}}.dump(2);
}

unsigned worker_count() {
  if (const char* env = std::getenv("DEPMAT_THREADS")) {
    unsigned v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec == std::errc{} && ptr == end && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace depmat
