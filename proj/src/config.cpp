#include "depmat/errors.hpp"
#include "depmat/harness.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>

namespace depmat {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

const json& require(const json& j, const char* key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string(where) + ": missing key '" + key + "'");
  return *it;
}

double number(const json& j, const char* key, std::string_view where) {
  const json& v = require(j, key, where);
  if (!v.is_number()) throw ConfigError(std::string(where) + "." + key + ": expected a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback, std::string_view where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

std::string text(const json& j, const char* key, std::string_view where) {
  const json& v = require(j, key, where);
  if (!v.is_string()) throw ConfigError(std::string(where) + "." + key + ": expected a string");
  return v.get<std::string>();
}

// number | "auto" -> optional
std::optional<double> number_or_auto(const json& j, const char* key, std::string_view where) {
  if (!j.contains(key)) return std::nullopt;
  const json& v = j.at(key);
  if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
  if (!v.is_number()) throw ConfigError(std::string(where) + "." + key + ": expected a number or \"auto\"");
  return v.get<double>();
}

CoeffFamily parse_coeffs(const json& j) {
  const std::string family = text(j, "family", "coeffs");
  if (family == "geometric") {
    check_keys(j, {"family", "alpha1", "ratio"}, "coeffs");
    return GeometricCoeffs{number(j, "alpha1", "coeffs"), number(j, "ratio", "coeffs")};
  }
  if (family == "poly_decay") {
    check_keys(j, {"family", "alpha1", "exponent"}, "coeffs");
    return PolyDecayCoeffs{number(j, "alpha1", "coeffs"), number(j, "exponent", "coeffs")};
  }
  throw ConfigError("coeffs.family: unknown family '" + family + "'");
}

json coeffs_json(const CoeffFamily& f) {
  if (const auto* g = std::get_if<GeometricCoeffs>(&f))
    return {{"family", "geometric"}, {"alpha1", g->alpha1}, {"ratio", g->ratio}};
  const auto& pd = std::get<PolyDecayCoeffs>(f);
  return {{"family", "poly_decay"}, {"alpha1", pd.alpha1}, {"exponent", pd.exponent}};
}

Spectrum parse_spectrum(const json& j) {
  const std::string kind = text(j, "kind", "spectrum");
  Spectrum s;
  if (kind == "isotropic") {
    check_keys(j, {"kind"}, "spectrum");
  } else if (kind == "spiked") {
    check_keys(j, {"kind", "effective_rank"}, "spectrum");
    s.kind = Spectrum::Kind::spiked;
    s.effective_rank = number(j, "effective_rank", "spectrum");
  } else {
    throw ConfigError("spectrum.kind: unknown kind '" + kind + "'");
  }
  return s;
}

json spectrum_json(const Spectrum& s) {
  if (s.kind == Spectrum::Kind::isotropic) return {{"kind", "isotropic"}};
  return {{"kind", "spiked"}, {"effective_rank", s.effective_rank}};
}

using NoiseLaw = NoiseSpec::Law;

NoiseLaw parse_noise(const json& j, bool& unit_covariance, bool allow_unit) {
  const std::string kind = text(j, "kind", "noise");
  unit_covariance = false;
  if (kind == "bounded") {
    check_keys(j, {"kind", "lambda", "dim"}, "noise");
    const json& l = require(j, "lambda", "noise");
    if (allow_unit && l.is_string() && l.get<std::string>() == "unit_covariance") {
      unit_covariance = true;
      return BoundedNoise{0.0};
    }
    return BoundedNoise{number(j, "lambda", "noise")};
  }
  if (kind == "poly_moment") {
    check_keys(j, {"kind", "k", "lambda", "dim"}, "noise");
    return PolyMomentNoise{number(j, "k", "noise"), number(j, "lambda", "noise")};
  }
  if (kind == "exp_moment") {
    check_keys(j, {"kind", "k", "lambda", "dim"}, "noise");
    return ExpMomentNoise{number(j, "k", "noise"), number(j, "lambda", "noise")};
  }
  throw ConfigError("noise.kind: unknown kind '" + kind + "'");
}

json noise_json(const NoiseLaw& law) {
  if (const auto* b = std::get_if<BoundedNoise>(&law)) return {{"kind", "bounded"}, {"lambda", b->lambda}};
  if (const auto* pm = std::get_if<PolyMomentNoise>(&law))
    return {{"kind", "poly_moment"}, {"k", pm->k}, {"lambda", pm->lambda}};
  const auto& em = std::get<ExpMomentNoise>(law);
  return {{"kind", "exp_moment"}, {"k", em.k}, {"lambda", em.lambda}};
}

Eigen::MatrixXd parse_matrix(const json& rows, std::string_view where) {
  if (!rows.is_array() || rows.empty()) throw ConfigError(std::string(where) + ": expected a non-empty array of rows");
  const auto r = static_cast<Index>(rows.size());
  const auto c = static_cast<Index>(rows.front().size());
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i) {
    const json& row = rows.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Index>(row.size()) != c) throw ConfigError(std::string(where) + ": ragged rows");
    for (Index k = 0; k < c; ++k) {
      const json& v = row.at(static_cast<std::size_t>(k));
      if (!v.is_number()) throw ConfigError(std::string(where) + ": non-numeric entry");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

ProcessRecipe parse_recipe(const json& j) {
  check_keys(j, {"latent", "noise"}, "process");
  ProcessRecipe r;
  const json& lat = require(j, "latent", "process");
  const std::string kind = text(lat, "kind", "process.latent");

  auto parse_common = [&] {
    if (lat.contains("innovation_bound")) {
      const json& b = lat.at("innovation_bound");
      if (b.is_string() && b.get<std::string>() == "unit_covariance")
        r.innovation_bound.reset();
      else
        r.innovation_bound = number(lat, "innovation_bound", "process.latent");
    }
    if (lat.contains("spectrum")) r.spectrum = parse_spectrum(lat.at("spectrum"));
    r.horizon_tol = number_or(lat, "horizon_tol", r.horizon_tol, "process.latent");
  };

  if (kind == "cbs") {
    check_keys(lat, {"kind", "coeffs", "innovation_bound", "spectrum", "horizon_tol"}, "process.latent");
    r.latent = ProcessRecipe::Latent::cbs;
    r.coeffs = parse_coeffs(require(lat, "coeffs", "process.latent"));
    parse_common();
  } else if (kind == "var") {
    check_keys(lat, {"kind", "transition", "innovation_bound", "spectrum", "horizon_tol"}, "process.latent");
    r.latent = ProcessRecipe::Latent::var;
    const json& tr = require(lat, "transition", "process.latent");
    const std::string tk = text(tr, "kind", "transition");
    if (tk == "scaled_identity" || tk == "scaled_rotation") {
      check_keys(tr, {"kind", "scale"}, "transition");
      r.transition = tk == "scaled_identity" ? ProcessRecipe::Transition::scaled_identity
                                             : ProcessRecipe::Transition::scaled_rotation;
      r.transition_scale = number(tr, "scale", "transition");
    } else if (tk == "matrix") {
      check_keys(tr, {"kind", "rows"}, "transition");
      r.transition = ProcessRecipe::Transition::matrix;
      r.transition_matrix = parse_matrix(require(tr, "rows", "transition"), "transition.rows");
    } else {
      throw ConfigError("transition.kind: unknown kind '" + tk + "'");
    }
    parse_common();
  } else {
    throw ConfigError("process.latent.kind: unknown kind '" + kind + "'");
  }

  if (j.contains("noise")) r.noise = parse_noise(j.at("noise"), r.noise_unit_covariance, true);
  return r;
}

json recipe_json(const ProcessRecipe& r) {
  json lat;
  if (r.latent == ProcessRecipe::Latent::cbs) {
    lat["kind"] = "cbs";
    lat["coeffs"] = coeffs_json(r.coeffs);
  } else {
    lat["kind"] = "var";
    switch (r.transition) {
      case ProcessRecipe::Transition::scaled_identity:
        lat["transition"] = {{"kind", "scaled_identity"}, {"scale", r.transition_scale}};
        break;
      case ProcessRecipe::Transition::scaled_rotation:
        lat["transition"] = {{"kind", "scaled_rotation"}, {"scale", r.transition_scale}};
        break;
      case ProcessRecipe::Transition::matrix:
        lat["transition"] = {{"kind", "matrix"}, {"rows", matrix_json(r.transition_matrix)}};
        break;
    }
  }
  if (r.innovation_bound)
    lat["innovation_bound"] = *r.innovation_bound;
  else
    lat["innovation_bound"] = "unit_covariance";
  lat["spectrum"] = spectrum_json(r.spectrum);
  lat["horizon_tol"] = r.horizon_tol;
  json noise = noise_json(r.noise);
  if (r.noise_unit_covariance) noise["lambda"] = "unit_covariance";
  return {{"latent", lat}, {"noise", noise}};
}

const char* estimator_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::empirical: return "empirical";
    case EstimatorKind::truncated: return "truncated";
    case EstimatorKind::covariance: return "covariance";
    case EstimatorKind::lagged: return "lagged";
    case EstimatorKind::hmm: return "hmm";
    case EstimatorKind::regression: return "regression";
  }
  return "?";
}

const char* regime_name(BoundRegime r) {
  switch (r) {
    case BoundRegime::automatic: return "auto";
    case BoundRegime::bounded: return "bounded";
    case BoundRegime::composite: return "composite";
  }
  return "?";
}

template <class T>
std::vector<T> positive_list(const json& j, const char* key) {
  const json& v = require(j, key, "config");
  if (!v.is_array()) throw ConfigError(std::string("config.") + key + ": expected an array");
  std::vector<T> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<long long>() < 1)
      throw ConfigError(std::string("config.") + key + ": entries must be positive integers");
    out.push_back(static_cast<T>(e.get<long long>()));
  }
  return out;
}

ExperimentConfig parse_config_json(const json& j) {
  check_keys(j, {"process", "estimator", "bound", "regression", "trials", "n_grid", "p", "p_grid", "master_seed",
                 "output_path"},
             "config");
  ExperimentConfig c;
  c.process = parse_recipe(require(j, "process", "config"));

  if (j.contains("estimator")) {
    const json& e = j.at("estimator");
    check_keys(e, {"kind", "tau", "center"}, "estimator");
    const std::string kind = text(e, "kind", "estimator");
    bool found = false;
    for (auto k : {EstimatorKind::empirical, EstimatorKind::truncated, EstimatorKind::covariance,
                   EstimatorKind::lagged, EstimatorKind::hmm, EstimatorKind::regression})
      if (kind == estimator_name(k)) {
        c.estimator.kind = k;
        found = true;
      }
    if (!found) throw ConfigError("estimator.kind: unknown estimator '" + kind + "'");
    c.estimator.tau = number_or_auto(e, "tau", "estimator");
    if (e.contains("center")) {
      if (!e.at("center").is_boolean()) throw ConfigError("estimator.center: expected a boolean");
      c.estimator.center = e.at("center").get<bool>();
    }
  }

  if (j.contains("bound")) {
    const json& b = j.at("bound");
    check_keys(b, {"regime", "t", "tau"}, "bound");
    if (b.contains("regime")) {
      const std::string r = text(b, "regime", "bound");
      if (r == "auto") c.bound.regime = BoundRegime::automatic;
      else if (r == "bounded") c.bound.regime = BoundRegime::bounded;
      else if (r == "composite") c.bound.regime = BoundRegime::composite;
      else throw ConfigError("bound.regime: unknown regime '" + r + "'");
    }
    c.bound.t = number_or(b, "t", c.bound.t, "bound");
    c.bound.tau = number_or_auto(b, "tau", "bound");
  }

  if (j.contains("regression")) {
    const json& r = j.at("regression");
    check_keys(r, {"theta_norm", "noise_variance", "c"}, "regression");
    c.regression.theta_norm = number_or(r, "theta_norm", c.regression.theta_norm, "regression");
    c.regression.noise_variance = number_or(r, "noise_variance", c.regression.noise_variance, "regression");
    c.regression.c = number_or(r, "c", c.regression.c, "regression");
  }

  const json& trials = require(j, "trials", "config");
  if (!trials.is_number_integer() || trials.get<long long>() < 1)
    throw ConfigError("config.trials: expected a positive integer");
  c.trials = static_cast<std::size_t>(trials.get<long long>());
  c.n_grid = positive_list<std::size_t>(j, "n_grid");
  const json& p = require(j, "p", "config");
  if (!p.is_number_integer() || p.get<long long>() < 1) throw ConfigError("config.p: expected a positive integer");
  c.p = static_cast<Index>(p.get<long long>());
  if (j.contains("p_grid")) c.p_grid = positive_list<Index>(j, "p_grid");
  if (j.contains("master_seed")) {
    const json& s = j.at("master_seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("config.master_seed: expected a non-negative integer");
    c.master_seed = s.get<std::uint64_t>();
  }
  if (j.contains("output_path")) {
    if (!j.at("output_path").is_string()) throw ConfigError("config.output_path: expected a string");
    c.output_path = j.at("output_path").get<std::string>();
  }
  c.validate();
  return c;
}

json report_json(const BoundReport& r) {
  json terms = {{"main", r.terms.main}, {"additive", r.terms.additive}};
  if (r.terms.variance) terms["variance"] = *r.terms.variance;
  return {{"bound_value", r.bound_value}, {"failure_prob", r.failure_prob}, {"regime", r.regime},
          {"tau_used", r.tau_used},       {"terms", terms},                 {"vacuous", r.vacuous},
          {"oracle", r.oracle},           {"warnings", r.warnings}};
}

}  // namespace

ProcessSpec ProcessRecipe::build(Index p) const {
  if (p < 1) throw ConfigError("process: dimension must be positive");
  const double b_xi = innovation_bound ? *innovation_bound : std::sqrt(3.0 * static_cast<double>(p));
  ProcessSpec spec;
  if (latent == Latent::cbs) {
    CbsSpec c;
    c.dim = p;
    c.coeffs = coeffs;
    c.innovation_bound = b_xi;
    c.spectrum = spectrum;
    c.horizon_tol = horizon_tol;
    spec.latent = c;
  } else {
    VarSpec v;
    v.innovation_bound = b_xi;
    v.spectrum = spectrum;
    v.horizon_tol = horizon_tol;
    switch (transition) {
      case Transition::scaled_identity:
        v.transition = transition_scale * Eigen::MatrixXd::Identity(p, p);
        break;
      case Transition::scaled_rotation: {
        // 2x2 rotation blocks by pi/6; a trailing 1x1 block for odd p.
        v.transition = Eigen::MatrixXd::Zero(p, p);
        const double c = std::cos(std::numbers::pi / 6.0);
        const double s = std::sin(std::numbers::pi / 6.0);
        Index i = 0;
        for (; i + 1 < p; i += 2) {
          v.transition(i, i) = c;
          v.transition(i, i + 1) = -s;
          v.transition(i + 1, i) = s;
          v.transition(i + 1, i + 1) = c;
        }
        if (i < p) v.transition(i, i) = 1.0;
        v.transition *= transition_scale;
        break;
      }
      case Transition::matrix:
        if (transition_matrix.rows() != p || transition_matrix.cols() != p)
          throw ConfigError("transition.rows: matrix dimension does not match p");
        v.transition = transition_matrix;
        break;
    }
    spec.latent = v;
  }
  spec.noise.dim = p;
  spec.noise.law = noise;
  if (noise_unit_covariance) spec.noise.law = BoundedNoise{std::sqrt(static_cast<double>(p))};
  return spec;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("config.trials: must be >= 1");
  if (n_grid.empty()) throw ConfigError("config.n_grid: must be non-empty");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1]) throw ConfigError("config.n_grid: must be strictly increasing");
  if (p < 1) throw ConfigError("config.p: must be positive");
  if (!(bound.t > 0.0)) throw ConfigError("bound.t: must be positive");
  if (estimator.kind == EstimatorKind::hmm && process.latent != ProcessRecipe::Latent::var)
    throw ConfigError("estimator hmm: requires a var latent (the planted transition)");
  if (estimator.kind == EstimatorKind::regression && process.latent != ProcessRecipe::Latent::cbs)
    throw ConfigError("estimator regression: requires a cbs latent");
  try {
    process.build(p).validate();
    for (Index q : p_grid) process.build(q).validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("process: ") + e.what());
  }
}

ExperimentConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  try {
    return parse_config_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["process"] = recipe_json(c.process);
  json e = {{"kind", estimator_name(c.estimator.kind)}, {"center", c.estimator.center}};
  if (c.estimator.tau) e["tau"] = *c.estimator.tau; else e["tau"] = "auto";
  j["estimator"] = e;
  json b = {{"regime", regime_name(c.bound.regime)}, {"t", c.bound.t}};
  if (c.bound.tau) b["tau"] = *c.bound.tau; else b["tau"] = "auto";
  j["bound"] = b;
  j["regression"] = {{"theta_norm", c.regression.theta_norm},
                     {"noise_variance", c.regression.noise_variance},
                     {"c", c.regression.c}};
  j["trials"] = c.trials;
  j["n_grid"] = c.n_grid;
  j["p"] = c.p;
  if (!c.p_grid.empty()) j["p_grid"] = c.p_grid;
  j["master_seed"] = c.master_seed;
  if (!c.output_path.empty()) j["output_path"] = c.output_path;
  return j.dump(2);
}

std::string process_to_json(const ProcessSpec& spec) {
  json lat;
  if (const auto* c = std::get_if<CbsSpec>(&spec.latent)) {
    lat = {{"kind", "cbs"},
           {"dim", c->dim},
           {"coeffs", coeffs_json(c->coeffs)},
           {"innovation_bound", c->innovation_bound},
           {"spectrum", spectrum_json(c->spectrum)},
           {"horizon_tol", c->horizon_tol}};
  } else {
    const auto& v = std::get<VarSpec>(spec.latent);
    lat = {{"kind", "var"},
           {"transition", matrix_json(v.transition)},
           {"innovation_bound", v.innovation_bound},
           {"spectrum", spectrum_json(v.spectrum)},
           {"horizon_tol", v.horizon_tol}};
  }
  json noise = noise_json(spec.noise.law);
  noise["dim"] = spec.noise.dim;
  return json{{"latent", lat}, {"noise", noise}}.dump(2);
}

ProcessSpec process_from_json(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    check_keys(j, {"latent", "noise"}, "process");
    const json& lat = require(j, "latent", "process");
    ProcessSpec spec;
    const std::string kind = text(lat, "kind", "process.latent");
    if (kind == "cbs") {
      check_keys(lat, {"kind", "dim", "coeffs", "innovation_bound", "spectrum", "horizon_tol"}, "process.latent");
      CbsSpec c;
      c.dim = static_cast<Index>(require(lat, "dim", "process.latent").get<long long>());
      c.coeffs = parse_coeffs(require(lat, "coeffs", "process.latent"));
      c.innovation_bound = number(lat, "innovation_bound", "process.latent");
      c.spectrum = parse_spectrum(require(lat, "spectrum", "process.latent"));
      c.horizon_tol = number(lat, "horizon_tol", "process.latent");
      spec.latent = c;
    } else if (kind == "var") {
      check_keys(lat, {"kind", "transition", "innovation_bound", "spectrum", "horizon_tol"}, "process.latent");
      VarSpec v;
      v.transition = parse_matrix(require(lat, "transition", "process.latent"), "process.latent.transition");
      v.innovation_bound = number(lat, "innovation_bound", "process.latent");
      v.spectrum = parse_spectrum(require(lat, "spectrum", "process.latent"));
      v.horizon_tol = number(lat, "horizon_tol", "process.latent");
      spec.latent = v;
    } else {
      throw ConfigError("process.latent.kind: unknown kind '" + kind + "'");
    }
    const json& noise = require(j, "noise", "process");
    bool unit = false;
    spec.noise.law = parse_noise(noise, unit, false);
    spec.noise.dim = static_cast<Index>(require(noise, "dim", "noise").get<long long>());
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("process: ") + e.what());
  }
}

std::string report_to_json(const BoundReport& report) { return report_json(report).dump(2); }

BoundReport report_from_json(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    check_keys(j, {"bound_value", "failure_prob", "regime", "tau_used", "terms", "vacuous", "oracle", "warnings"},
               "report");
    BoundReport r;
    r.bound_value = j.at("bound_value").get<double>();
    r.failure_prob = j.at("failure_prob").get<double>();
    r.regime = j.at("regime").get<std::string>();
    r.tau_used = j.at("tau_used").get<double>();
    const json& t = j.at("terms");
    check_keys(t, {"main", "additive", "variance"}, "report.terms");
    r.terms.main = t.at("main").get<double>();
    r.terms.additive = t.at("additive").get<double>();
    if (t.contains("variance")) r.terms.variance = t.at("variance").get<double>();
    r.vacuous = j.value("vacuous", false);
    r.oracle = j.value("oracle", true);
    if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report: ") + e.what());
  }
}

}  // namespace depmat
