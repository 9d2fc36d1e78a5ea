#include "depmat/bounds.hpp"
#include "depmat/errors.hpp"
#include "depmat/estimators.hpp"
#include "depmat/harness.hpp"
#include "depmat/procgen.hpp"
#include "depmat/specmat.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace depmat;

namespace {

SymMatrix sym(const Eigen::MatrixXd& m) { return SymMatrix(m); }

BoundInput make_input(double sigma_norm, double eff_rank, double gamma_n, std::size_t n, double t,
                      const TailModel& tail, std::optional<double> tau) {
  BoundInput in;
  in.sigma_norm = sigma_norm;
  in.eff_rank = eff_rank;
  in.gamma_n = gamma_n;
  in.n = n;
  in.t = t;
  in.tail = tail;
  in.tau = tau;
  return in;
}

TailModel make_tail(const std::string& kind, double a, double b, double moment_bound) {
  TailModel tail;
  if (kind == "bounded")
    tail.regime = BoundedTail{a};
  else if (kind == "exp_decay")
    tail.regime = ExpDecayTail{a, b};
  else if (kind == "poly_decay")
    tail.regime = PolyDecayTail{a, b};
  else
    throw DomainError("tail kind must be bounded, exp_decay or poly_decay");
  tail.moment_bound = moment_bound;
  return tail;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Deviation bounds and estimators for dependent, heavy-tailed random matrices";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<VacuousBoundError>(m, "VacuousBoundError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  // spectral core
  m.def("sym_eig", [](const Eigen::MatrixXd& a) {
    const auto e = sym_eig(sym(a));
    return py::make_tuple(e.eigenvalues, e.basis);
  }, py::arg("matrix"), "Eigenvalues (non-increasing) and eigenvector columns of a symmetric matrix.");
  m.def("operator_norm", [](const Eigen::MatrixXd& a) { return operator_norm(sym(a)); }, py::arg("matrix"));
  m.def("effective_rank", [](const Eigen::MatrixXd& a) { return effective_rank(sym(a)); }, py::arg("matrix"));
  m.def("truncate_eigenvalues", [](const Eigen::MatrixXd& a, double tau) {
    return truncate_eigenvalues(sym(a), tau).matrix();
  }, py::arg("matrix"), py::arg("tau"));
  m.def("pseudo_inverse", [](const Eigen::MatrixXd& a, double rcond) {
    return pseudo_inverse(sym(a), rcond).matrix();
  }, py::arg("matrix"), py::arg("rcond") = 1e-12);

  // processes
  m.def("simulate", [](const std::string& config_json, std::size_t n, std::uint64_t seed) {
    const ExperimentConfig c = parse_config(config_json);
    return simulate_observations(c.process.build(c.p), n, seed);
  }, py::arg("config_json"), py::arg("n"), py::arg("seed"),
        "Simulate Y_1..Y_n (rows) for the process described by an experiment configuration.");
  m.def("population_moments", [](const std::string& config_json) {
    const ExperimentConfig c = parse_config(config_json);
    const PopulationMoments pm = population_moments(c.process.build(c.p));
    py::dict d;
    d["sigma"] = pm.sigma.matrix();
    d["lag1"] = pm.lag1;
    d["sigma_norm"] = pm.sigma_norm;
    d["eff_rank"] = pm.eff_rank;
    return d;
  }, py::arg("config_json"));
  m.def("gamma_geometric", [](double alpha1, double ratio, double envelope, double innovation_bound, std::size_t n) {
    const DependenceProfile prof = gamma_profile(GeometricCoeffs{alpha1, ratio}, envelope, innovation_bound, n);
    return py::make_tuple(prof.per_index, prof.max, prof.cap);
  }, py::arg("alpha1"), py::arg("ratio"), py::arg("envelope"), py::arg("innovation_bound"), py::arg("n"));

  // estimators
  m.def("covariance_estimator", [](const Eigen::MatrixXd& y, bool center) {
    return covariance_estimator(y, center).matrix();
  }, py::arg("y"), py::arg("center") = false);
  m.def("truncated_mean", [](const Eigen::MatrixXd& y, double tau) {
    return truncated_mean(MatrixSample::outer_products(y), tau).matrix();
  }, py::arg("y"), py::arg("tau"), "Truncated mean of the outer products of the rows of y.");
  m.def("lagged_covariance", [](const Eigen::MatrixXd& y) {
    const LaggedCovariance lc = lagged_covariance(y);
    return py::make_tuple(lc.augmented.matrix(), lc.naive);
  }, py::arg("y"));
  m.def("hmm_estimate", [](const Eigen::MatrixXd& y) { return hmm_estimate(y).a_hat; }, py::arg("y"));
  m.def("min_norm_regression", [](const Eigen::MatrixXd& x, const Eigen::VectorXd& z) {
    RegressionData d;
    d.covariates = x;
    d.responses = z;
    return min_norm_regression(d).theta;
  }, py::arg("covariates"), py::arg("responses"));
  m.def("excess_risk", [](const Eigen::VectorXd& hat, const Eigen::VectorXd& star, const Eigen::MatrixXd& sigma) {
    return excess_risk(hat, star, sym(sigma));
  }, py::arg("theta_hat"), py::arg("theta_star"), py::arg("sigma"));

  // bounds
  py::class_<BoundReport>(m, "BoundReport")
      .def_readonly("bound_value", &BoundReport::bound_value)
      .def_readonly("failure_prob", &BoundReport::failure_prob)
      .def_readonly("regime", &BoundReport::regime)
      .def_readonly("tau_used", &BoundReport::tau_used)
      .def_property_readonly("main", [](const BoundReport& r) { return r.terms.main; })
      .def_property_readonly("additive", [](const BoundReport& r) { return r.terms.additive; })
      .def_property_readonly("variance", [](const BoundReport& r) { return r.terms.variance; })
      .def_readonly("vacuous", &BoundReport::vacuous)
      .def_readonly("warnings", &BoundReport::warnings)
      .def("to_json", &report_to_json)
      .def("__repr__", [](const BoundReport& r) {
        return "<BoundReport " + r.regime + " bound=" + std::to_string(r.bound_value) +
               " failure_prob=" + std::to_string(r.failure_prob) + ">";
      });

  m.def("bound_bounded", [](double sigma_norm, double eff_rank, double gamma_n, std::size_t n, double t, double kappa2) {
    return bound_bounded(make_input(sigma_norm, eff_rank, gamma_n, n, t, make_tail("bounded", kappa2, 0.0, kappa2),
                                    std::nullopt));
  }, py::arg("sigma_norm"), py::arg("eff_rank"), py::arg("gamma_n"), py::arg("n"), py::arg("t"), py::arg("kappa2"));
  m.def("bound_heavy", [](double sigma_norm, double eff_rank, double gamma_n, std::size_t n, double t,
                          const std::string& tail, double a, double b, double moment_bound, std::optional<double> tau) {
    return bound_heavy(make_input(sigma_norm, eff_rank, gamma_n, n, t, make_tail(tail, a, b, moment_bound), tau));
  }, py::arg("sigma_norm"), py::arg("eff_rank"), py::arg("gamma_n"), py::arg("n"), py::arg("t"), py::arg("tail"),
        py::arg("a"), py::arg("b") = 0.0, py::arg("moment_bound") = 0.0, py::arg("tau") = py::none());
  m.def("select_tau", [](const std::string& tail, double a, double b, double n, double t) {
    return select_tau(make_tail(tail, a, b, 0.0), n, t);
  }, py::arg("tail"), py::arg("a"), py::arg("b"), py::arg("n"), py::arg("t"));

  // experiments
  py::class_<CoverageReport>(m, "CoverageReport")
      .def_readonly("n", &CoverageReport::n)
      .def_readonly("p", &CoverageReport::p)
      .def_readonly("per_trial_deviation", &CoverageReport::per_trial_deviation)
      .def_readonly("per_trial_bound", &CoverageReport::per_trial_bound)
      .def_readonly("bound", &CoverageReport::bound)
      .def_readonly("bound_value", &CoverageReport::bound_value)
      .def_readonly("nominal_coverage", &CoverageReport::nominal_coverage)
      .def_readonly("empirical_coverage", &CoverageReport::empirical_coverage)
      .def_readonly("wilson_interval", &CoverageReport::wilson_interval);

  m.def("oracle_bound", [](const std::string& config_json, std::optional<std::size_t> n) {
    const ExperimentConfig c = parse_config(config_json);
    return oracle_bound(make_oracle(c, n.value_or(c.n_grid.front()), c.p), c);
  }, py::arg("config_json"), py::arg("n") = py::none());
  m.def("run_coverage", [](const std::string& config_json) {
    const ExperimentConfig c = parse_config(config_json);
    py::gil_scoped_release release;
    return run_coverage(c);
  }, py::arg("config_json"));
  m.def("coverage_csv", &coverage_csv, py::arg("reports"));
  m.def("run_rate_sweep", [](const std::string& config_json) {
    const ExperimentConfig c = parse_config(config_json);
    RateSweep s;
    {
      py::gil_scoped_release release;
      s = run_rate_sweep(c);
    }
    py::list pts;
    for (const auto& p : s.points) pts.append(py::make_tuple(p.n, p.median_deviation, p.bound_value));
    return py::make_tuple(pts, s.slope, s.slope_std_error);
  }, py::arg("config_json"), "Returns ([(n, median deviation, bound)], slope, slope standard error).");
  m.def("run_dimension_sweep", [](const std::string& config_json) {
    const ExperimentConfig c = parse_config(config_json);
    DimensionSweep s;
    {
      py::gil_scoped_release release;
      s = run_dimension_sweep(c);
    }
    py::list pts;
    for (const auto& p : s.points) pts.append(py::make_tuple(p.p, p.median_deviation, p.bound_value));
    return py::make_tuple(pts, s.deviation_ratio);
  }, py::arg("config_json"), "Returns ([(p, median deviation, bound)], max/min deviation ratio).");
}
