#include "depmat/errors.hpp"
#include "depmat/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace depmat {
namespace {

const char* kBoundedConfig = R"({
  "process": {
    "latent": {"kind": "cbs", "coeffs": {"family": "geometric", "alpha1": 0.5, "ratio": 0.5}, "innovation_bound": 1.0},
    "noise": {"kind": "bounded", "lambda": 0.0}
  },
  "estimator": {"kind": "covariance"},
  "bound": {"regime": "bounded", "t": 3},
  "trials": 40,
  "n_grid": [200, 400],
  "p": 6,
  "master_seed": 11
})";

const char* kHeavyConfig = R"({
  "process": {
    "latent": {"kind": "cbs", "coeffs": {"family": "poly_decay", "alpha1": 0.5, "exponent": 3.5},
               "innovation_bound": 1.0, "spectrum": {"kind": "spiked", "effective_rank": 2}},
    "noise": {"kind": "poly_moment", "k": 6, "lambda": 0.1}
  },
  "estimator": {"kind": "truncated", "tau": "auto"},
  "bound": {"regime": "composite", "t": 2, "tau": "auto"},
  "trials": 10,
  "n_grid": [300],
  "p": 5,
  "master_seed": 3
})";

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("depmat_test_" + name)).string();
}

void write_file(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(Config, ParsesAndRoundTrips) {
  const ExperimentConfig c = parse_config(kHeavyConfig);
  EXPECT_EQ(c.estimator.kind, EstimatorKind::truncated);
  EXPECT_FALSE(c.estimator.tau.has_value());
  EXPECT_EQ(c.bound.regime, BoundRegime::composite);
  EXPECT_EQ(c.p, 5);
  EXPECT_EQ(c.master_seed, 3u);
  const std::string once = config_to_json(c);
  EXPECT_EQ(config_to_json(parse_config(once)), once);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  std::string bad = kBoundedConfig;
  bad.insert(bad.find("\"trials\""), "\"trails\": 5, ");
  EXPECT_THROW(parse_config(bad), ConfigError);

  std::string nested = kBoundedConfig;
  nested.replace(nested.find("\"kind\": \"covariance\""), 20, "\"kind\": \"covariance\", \"tua\": 1");
  EXPECT_THROW(parse_config(nested), ConfigError);

  std::string unsorted = kBoundedConfig;
  unsorted.replace(unsorted.find("[200, 400]"), 10, "[400, 200]");
  EXPECT_THROW(parse_config(unsorted), ConfigError);

  std::string zero_trials = kBoundedConfig;
  zero_trials.replace(zero_trials.find("\"trials\": 40"), 12, "\"trials\": 0");
  EXPECT_THROW(parse_config(zero_trials), ConfigError);

  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(load_config(temp_path("does_not_exist.json")), ConfigError);
}

TEST(Config, ProcessSpecRoundTrips) {
  for (const char* text : {kBoundedConfig, kHeavyConfig}) {
    const ProcessSpec spec = parse_config(text).process.build(7);
    const std::string json = process_to_json(spec);
    EXPECT_EQ(process_to_json(process_from_json(json)), json);
  }
  ProcessRecipe var;
  var.latent = ProcessRecipe::Latent::var;
  var.transition = ProcessRecipe::Transition::scaled_rotation;
  var.transition_scale = 0.9;
  var.innovation_bound.reset();
  var.noise_unit_covariance = true;
  const ProcessSpec spec = var.build(5);
  EXPECT_NEAR(std::get<VarSpec>(spec.latent).transition_norm(), 0.9, 1e-12);
  EXPECT_NEAR(spec.noise.second_moment(), 5.0, 1e-12);
  const std::string json = process_to_json(spec);
  EXPECT_EQ(process_to_json(process_from_json(json)), json);
}

TEST(Config, ReportRoundTrips) {
  const ExperimentConfig c = parse_config(kHeavyConfig);
  const BoundReport r = oracle_bound(make_oracle(c, 300, 5), c);
  const BoundReport back = report_from_json(report_to_json(r));
  EXPECT_EQ(back.bound_value, r.bound_value);
  EXPECT_EQ(back.failure_prob, r.failure_prob);
  EXPECT_EQ(back.tau_used, r.tau_used);
  EXPECT_EQ(back.terms.main, r.terms.main);
  EXPECT_EQ(back.terms.additive, r.terms.additive);
  EXPECT_EQ(back.regime, r.regime);
  EXPECT_EQ(back.warnings, r.warnings);
}

TEST(Wilson, MatchesScoreInterval) {
  const double z = 1.959963984540054;
  auto ref = [&](double k, double m) {
    const double ph = k / m;
    const double c = (ph + z * z / (2 * m)) / (1 + z * z / m);
    const double h = z / (1 + z * z / m) * std::sqrt(ph * (1 - ph) / m + z * z / (4 * m * m));
    return std::pair{c - h, c + h};
  };
  for (auto [k, m] : {std::pair{200, 200}, std::pair{190, 200}, std::pair{0, 10}, std::pair{1, 1}}) {
    const auto [lo, hi] = wilson_interval(k, m);
    const auto [rlo, rhi] = ref(k, m);
    EXPECT_NEAR(lo, std::max(0.0, rlo), 1e-14);
    EXPECT_NEAR(hi, std::min(1.0, rhi), 1e-14);
  }
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_THROW(median({}), DomainError);
}

TEST(Coverage, DeterministicAcrossWorkerCounts) {
  const ExperimentConfig c = parse_config(kBoundedConfig);
  setenv("DEPMAT_THREADS", "1", 1);
  const std::string one = coverage_csv(run_coverage(c));
  setenv("DEPMAT_THREADS", "4", 1);
  const std::string four = coverage_csv(run_coverage(c));
  unsetenv("DEPMAT_THREADS");
  EXPECT_EQ(one, four);
  EXPECT_EQ(coverage_summary_json(run_coverage(c)), coverage_summary_json(run_coverage(c)));
}

TEST(Coverage, ReportInvariants) {
  ExperimentConfig c = parse_config(kBoundedConfig);
  const auto reports = run_coverage(c);
  ASSERT_EQ(reports.size(), 2u);
  for (const auto& r : reports) {
    EXPECT_EQ(r.per_trial_deviation.size(), 40u);
    for (double d : r.per_trial_deviation) EXPECT_GE(d, 0.0);
    EXPECT_GE(r.empirical_coverage, 0.0);
    EXPECT_LE(r.empirical_coverage, 1.0);
    EXPECT_NEAR(r.nominal_coverage, 1.0 - std::exp(-3.0), 1e-15);
    EXPECT_LE(r.wilson_interval.first, r.empirical_coverage);
    EXPECT_GE(r.wilson_interval.second, r.empirical_coverage);
  }
  c.trials = 1;
  const double single = run_coverage(c).front().empirical_coverage;
  EXPECT_TRUE(single == 0.0 || single == 1.0);
}

TEST(Coverage, CsvRoundTrips) {
  const auto reports = run_coverage(parse_config(kHeavyConfig));
  const auto rows = parse_coverage_csv(coverage_csv(reports));
  const auto expect = reports.front().rows();
  ASSERT_EQ(rows.size(), expect.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].trial, expect[i].trial);
    EXPECT_EQ(rows[i].n, expect[i].n);
    EXPECT_EQ(rows[i].p, expect[i].p);
    EXPECT_EQ(rows[i].deviation, expect[i].deviation);
    EXPECT_EQ(rows[i].bound, expect[i].bound);
    EXPECT_EQ(rows[i].covered, expect[i].covered);
  }
  EXPECT_THROW(parse_coverage_csv("trial,n\n"), ConfigError);
  EXPECT_THROW(parse_coverage_csv("trial,n,p,deviation,bound,covered\n1,2,3\n"), ConfigError);
}

TEST(Coverage, RefusesVacuousBounds) {
  ExperimentConfig c = parse_config(kBoundedConfig);
  c.bound.regime = BoundRegime::composite;
  c.bound.tau = 0.5;  // below 4 B^2, so F(tau) = 1
  EXPECT_THROW(run_coverage(c), VacuousBoundError);
}

TEST(Coverage, EveryEstimatorRuns) {
  ExperimentConfig c = parse_config(kHeavyConfig);
  c.trials = 3;
  for (EstimatorKind k : {EstimatorKind::empirical, EstimatorKind::covariance, EstimatorKind::truncated,
                          EstimatorKind::lagged}) {
    c.estimator.kind = k;
    const OracleContext o = make_oracle(c, 300, 5);
    EXPECT_GE(run_trial(o, c, 1).deviation, 0.0);
    EXPECT_GT(oracle_bound(o, c).bound_value, 0.0);
  }
  ExperimentConfig h = parse_config(kBoundedConfig);
  h.process.latent = ProcessRecipe::Latent::var;
  h.estimator.kind = EstimatorKind::hmm;
  h.bound.regime = BoundRegime::automatic;
  EXPECT_GE(run_trial(make_oracle(h, 100, 3), h, 1).deviation, 0.0);
  h.estimator.kind = EstimatorKind::regression;
  EXPECT_THROW(h.validate(), ConfigError);
}

TEST(Sweeps, ContractsAndShapes) {
  ExperimentConfig c = parse_config(kBoundedConfig);
  c.trials = 5;
  c.n_grid = {100, 200, 400};
  EXPECT_THROW(run_rate_sweep(c), ConfigError);
  c.n_grid = {100, 200, 400, 800};
  const RateSweep rs = run_rate_sweep(c);
  EXPECT_EQ(rs.points.size(), 4u);
  EXPECT_LT(rs.slope, 0.0);
  EXPECT_GE(rs.slope_std_error, 0.0);

  c.p_grid = {};
  const DimensionSweep one = run_dimension_sweep(c);
  ASSERT_EQ(one.points.size(), 1u);
  EXPECT_EQ(one.points.front().p, c.p);
  EXPECT_EQ(one.deviation_ratio, 1.0);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DEPMAT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodesAndOutputs) {
  const std::string cfg = temp_path("cli.json");
  write_file(cfg, kBoundedConfig);
  EXPECT_EQ(run_cli("bound --config " + cfg), 0);
  EXPECT_EQ(run_cli("bound --config " + temp_path("missing.json")), 2);
  EXPECT_EQ(run_cli("frobnicate --config " + cfg), 2);
  EXPECT_EQ(run_cli(""), 2);

  const std::string csv = temp_path("cli.csv");
  std::filesystem::remove(csv);
  EXPECT_EQ(run_cli("coverage --config " + cfg + " --out " + csv + " --seed 5"), 0);
  const auto rows = parse_coverage_csv(read_file(csv));
  EXPECT_EQ(rows.size(), 80u);

  const std::string report = temp_path("cli_report.json");
  EXPECT_EQ(run_cli("bound --config " + cfg + " --out " + report), 0);
  EXPECT_GT(report_from_json(read_file(report)).bound_value, 0.0);

  std::string vac = kBoundedConfig;
  vac.replace(vac.find("\"regime\": \"bounded\""), 19, "\"regime\": \"composite\", \"tau\": 0.5");
  const std::string vac_cfg = temp_path("cli_vacuous.json");
  write_file(vac_cfg, vac);
  EXPECT_EQ(run_cli("coverage --config " + vac_cfg), 3);

  for (const char* sub : {"simulate", "estimate", "sweep-dim"}) EXPECT_EQ(run_cli(std::string(sub) + " --config " + cfg), 0) << sub;
}

}  // namespace
}  // namespace depmat
