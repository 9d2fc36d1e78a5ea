#include "depmat/bounds.hpp"

#include "depmat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace depmat {

namespace {

const CompositeTail& require_composite(const TailModel& tail, const char* who) {
  const auto* c = std::get_if<CompositeTail>(&tail.regime);
  if (c == nullptr) throw DomainError(std::string(who) + ": requires the composite tail model of a process");
  return *c;
}

void finish(BoundReport& r, double t, double n, double f_tau) {
  const double raw = std::exp(-t) + n * f_tau;
  r.vacuous = raw >= 1.0;
  r.failure_prob = std::min(1.0, raw);
  if (r.vacuous) r.warnings.emplace_back("failure probability reaches 1: the bound certifies nothing");
  if (!r.oracle) r.warnings.emplace_back("plug-in quantities: heuristic, not certified");
}

double resolve_tau(const BoundInput& in) {
  const double tau = in.tau ? *in.tau : select_tau(in.tail, static_cast<double>(in.n), in.t);
  if (!(tau > 0.0)) throw DomainError("truncation level tau must be positive");
  return tau;
}

}  // namespace

void BoundInput::validate() const {
  if (!(sigma_norm > 0.0) || !std::isfinite(sigma_norm)) throw DomainError("bound input: ||Sigma|| must be positive");
  if (!(eff_rank >= 1.0 - 1e-12) || !std::isfinite(eff_rank)) throw DomainError("bound input: r(Sigma) must be >= 1");
  if (!(gamma_n >= 0.0) || !std::isfinite(gamma_n)) throw DomainError("bound input: Gamma_n must be >= 0");
  if (n < 1) throw DomainError("bound input: n must be >= 1");
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("bound input: t must be positive");
  if (tau && !(*tau > 0.0)) throw DomainError("bound input: tau must be positive");
}

double concentration_term(double sigma_norm, double level, double gamma_n, double eff_rank, double t, double n) {
  return 2.0 * std::numbers::sqrt2 * sigma_norm * (2.0 * level + gamma_n) * std::sqrt((4.0 * eff_rank + t) / n);
}

BoundReport bound_bounded(const BoundInput& in) {
  in.validate();
  const auto* b = std::get_if<BoundedTail>(&in.tail.regime);
  if (b == nullptr) throw DomainError("bound_bounded: tail regime must be bounded");
  BoundReport r;
  r.regime = "bounded";
  r.oracle = in.oracle;
  r.tau_used = b->kappa2;
  r.terms.main = concentration_term(in.sigma_norm, b->kappa2, in.gamma_n, in.eff_rank, in.t, static_cast<double>(in.n));
  r.terms.additive = 0.0;
  r.bound_value = r.terms.main + r.terms.additive;
  finish(r, in.t, static_cast<double>(in.n), 0.0);
  return r;
}

BoundReport bound_heavy(const BoundInput& in) {
  in.validate();
  const double tau = resolve_tau(in);
  const double f_tau = in.tail(tau);
  BoundReport r;
  r.regime = in.tail.label();
  r.oracle = in.oracle;
  r.tau_used = tau;
  r.terms.main = concentration_term(in.sigma_norm, tau, in.gamma_n, in.eff_rank, in.t, static_cast<double>(in.n));
  r.terms.additive = in.tail.moment_bound * std::sqrt(f_tau);
  r.bound_value = r.terms.main + r.terms.additive;
  finish(r, in.t, static_cast<double>(in.n), f_tau);
  return r;
}

BoundReport bound_truncated(const BoundInput& in) {
  BoundReport r = bound_heavy(in);
  r.regime = "truncated/" + r.regime;
  r.warnings.clear();
  r.vacuous = false;
  finish(r, in.t, static_cast<double>(in.n), 0.0);
  return r;
}

double select_tau(const TailModel& tail, double n, double t) {
  if (!(n >= 1.0)) throw DomainError("select_tau: n must be >= 1");
  if (!(t >= 0.0)) throw DomainError("select_tau: t must be >= 0");
  if (const auto* b = std::get_if<BoundedTail>(&tail.regime)) return b->kappa2;
  if (const auto* e = std::get_if<ExpDecayTail>(&tail.regime))
    return std::pow((std::log(n) + t) / e->a, 1.0 / e->b);
  if (const auto* pd = std::get_if<PolyDecayTail>(&tail.regime))
    return std::pow(pd->a * n, 1.0 / pd->b) * std::exp(t / pd->b);

  const auto& c = std::get<CompositeTail>(tail.regime);
  const double budget = std::exp(-t);
  auto feasible = [&](double tau) { return n * tail(tau) <= budget; };
  double lo = 4.0 * c.envelope * c.envelope;
  double hi = lo > 0.0 ? 2.0 * lo : 1.0;
  int doublings = 0;
  while (!feasible(hi)) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 2000) throw NumericalError("select_tau: no feasible truncation level found", hi);
  }
  if (lo == 0.0 && feasible(0.0)) return 0.0;
  while (hi - lo > 1e-9 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

BoundReport bound_covariance(const BoundInput& in) {
  const auto& c = require_composite(in.tail, "bound_covariance");
  BoundReport r = bound_heavy(in);
  r.regime = "covariance";
  if (r.tau_used <= 4.0 * c.envelope * c.envelope)
    r.warnings.emplace_back("tau <= 4 B^2: the indicator term makes F(tau) = 1");
  return r;
}

double lagged_effective_rank(double sigma_norm, double eff_rank, double sigma01_norm) {
  if (!(sigma01_norm > 0.0)) throw DomainError("lagged_effective_rank: ||Sigma01|| must be positive");
  return 2.0 * sigma_norm * eff_rank / sigma01_norm;
}

LaggedBoundReport bound_lagged(const BoundInput& in, double sigma01_norm, double r01, double sigma1_norm) {
  in.validate();
  if (in.n < 2) throw DomainError("bound_lagged: n must be >= 2");
  if (!(sigma01_norm > 0.0) || !(r01 >= 1.0 - 1e-12) || !(sigma1_norm >= 0.0))
    throw DomainError("bound_lagged: invalid lagged-covariance quantities");
  const auto& c = require_composite(in.tail, "bound_lagged");
  const double tau = resolve_tau(in);
  const double b2 = c.envelope * c.envelope;
  const double f_tau = std::clamp(4.0 * (tau <= 4.0 * b2 ? 1.0 : 0.0) + 4.0 * c.noise.tail(tau / 2.0), 0.0, 1.0);
  const double root = std::sqrt((4.0 * r01 + in.t) / (static_cast<double>(in.n) - 1.0));
  const double level = 32.0 * b2 + in.gamma_n;
  const double additive = in.tail.moment_bound * std::sqrt(f_tau);

  auto make = [&](double norm, const char* label) {
    BoundReport r;
    r.regime = label;
    r.oracle = in.oracle;
    r.tau_used = tau;
    r.terms.main = 4.0 * std::numbers::sqrt2 * norm * level * root;
    r.terms.additive = additive;
    r.bound_value = r.terms.main + r.terms.additive;
    finish(r, in.t, static_cast<double>(in.n), f_tau);
    return r;
  };
  return {make(sigma01_norm, "lagged"), make(sigma1_norm + in.sigma_norm, "lagged/marginal")};
}

BoundReport bound_hmm(const BoundInput& in, double sigma1_norm) {
  in.validate();
  const auto& c = require_composite(in.tail, "bound_hmm");
  const double b2 = c.envelope * c.envelope;
  if (!(in.t > 2.0 * b2)) {
    std::ostringstream os;
    os << "bound_hmm: requires t > 2 B^2 = " << 2.0 * b2 << " (got t = " << in.t << ")";
    throw DomainError(os.str());
  }
  if (!(sigma1_norm >= 0.0)) throw DomainError("bound_hmm: ||Sigma1|| must be >= 0");
  const double f_eps = c.noise.tail(in.t / 2.0);
  BoundReport r;
  r.regime = "hmm";
  r.oracle = in.oracle;
  r.tau_used = in.t;
  r.terms.main = 4.0 * std::numbers::sqrt2 * (sigma1_norm + in.sigma_norm) * in.sigma_norm * (1.0 + sigma1_norm) *
                 (32.0 * b2 + in.gamma_n) * std::sqrt((4.0 * in.eff_rank + in.t) / static_cast<double>(in.n));
  r.terms.additive = 2.0 * in.tail.moment_bound * (1.0 + sigma1_norm) * std::sqrt(f_eps);
  r.bound_value = r.terms.main + r.terms.additive;
  finish(r, in.t, static_cast<double>(in.n), f_eps);
  return r;
}

BoundReport bound_regression(const BoundInput& in, const RegressionBoundParams& params) {
  in.validate();
  const auto& c = require_composite(in.tail, "bound_regression");
  if (!(params.c > 1.0)) throw DomainError("bound_regression: c must exceed 1");
  const double b2 = c.envelope * c.envelope;
  const double upper = static_cast<double>(in.n) / params.c;
  if (!(in.t > b2 && in.t < upper)) {
    std::ostringstream os;
    os << "bound_regression: t must lie in (B^2, n / c) = (" << b2 << ", " << upper << ")";
    throw DomainError(os.str());
  }
  if (!(params.theta_norm >= 0.0) || !(params.trace_c >= 0.0) || !(params.noise_variance >= 0.0))
    throw DomainError("bound_regression: invalid parameters");
  const double tau = resolve_tau(in);
  const double f_eps = c.noise.tail(in.t / 4.0);
  BoundReport r;
  r.regime = "regression";
  r.oracle = in.oracle;
  r.tau_used = tau;
  r.terms.main = params.c * params.theta_norm * params.theta_norm *
                 concentration_term(in.sigma_norm, tau, in.gamma_n, in.eff_rank, in.t, static_cast<double>(in.n));
  r.terms.additive = in.tail.moment_bound * std::sqrt(f_eps);
  r.terms.variance = params.c * in.t * params.noise_variance * params.trace_c;
  r.bound_value = r.terms.main + r.terms.additive + *r.terms.variance;
  finish(r, in.t, static_cast<double>(in.n), f_eps);
  return r;
}

}  // namespace depmat
