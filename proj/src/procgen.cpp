#include "depmat/procgen.hpp"

#include "depmat/errors.hpp"
#include "depmat/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace depmat {

namespace {

constexpr std::size_t kMaxHorizon = 10'000'000;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// sum_{i>=N} i^(-s) by Euler-Maclaurin with three correction terms.
double power_tail(double s, double big_n) {
  const double n = big_n;
  const double lead = std::pow(n, 1.0 - s) / (s - 1.0);
  const double half = 0.5 * std::pow(n, -s);
  const double b2 = s / 12.0 * std::pow(n, -s - 1.0);
  const double b4 = s * (s + 1.0) * (s + 2.0) / 720.0 * std::pow(n, -s - 3.0);
  const double b6 = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * std::pow(n, -s - 5.0);
  return lead + half + b2 - b4 + b6;
}

// sum_{i>=1} i^(-s), s > 1
double zeta(double s) {
  constexpr int kHead = 64;
  double head = 0.0;
  for (int i = kHead - 1; i >= 1; --i) head += std::pow(static_cast<double>(i), -s);
  return head + power_tail(s, kHead);
}

// sum_{i>=a} i q^(i-1)
double weighted_geometric_tail(double q, double a) {
  return std::pow(q, a - 1.0) * (a - (a - 1.0) * q) / ((1.0 - q) * (1.0 - q));
}

Eigen::VectorXd innovation_halfwidths(const Spectrum& spectrum, Index p, double bound) {
  return bound * spectrum.weights(p).array().sqrt().matrix();
}

Eigen::VectorXd draw_innovation(Rng& rng, const Eigen::VectorXd& halfwidths) {
  Eigen::VectorXd xi(halfwidths.size());
  for (Index j = 0; j < xi.size(); ++j) xi[j] = rng.symmetric(halfwidths[j]);
  return xi;
}

double noise_radius(Rng& rng, const NoiseSpec& spec) {
  return std::visit(
      Overloaded{
          [](const BoundedNoise& b) { return b.lambda; },
          [&](const PolyMomentNoise& pm) {
            const double shape = pm.k + 1.0;
            const double scale = std::pow(pm.lambda / shape * (shape - pm.k), 1.0 / pm.k);
            return scale * std::pow(1.0 - rng.uniform(), -1.0 / shape);
          },
          [&](const ExpMomentNoise& em) { return std::pow(em.lambda * rng.exponential(), 1.0 / em.k); },
      },
      spec.law);
}

// E R^m of the radial law.
double radial_moment(const NoiseSpec& spec, double m) {
  return std::visit(
      Overloaded{
          [&](const BoundedNoise& b) { return std::pow(b.lambda, m); },
          [&](const PolyMomentNoise& pm) {
            const double shape = pm.k + 1.0;
            const double scale = std::pow(pm.lambda * (shape - pm.k) / shape, 1.0 / pm.k);
            return std::pow(scale, m) * shape / (shape - m);
          },
          [&](const ExpMomentNoise& em) { return std::pow(em.lambda, m / em.k) * std::tgamma(1.0 + m / em.k); },
      },
      spec.law);
}

std::size_t geometric_steps(double ratio, double start, double tol) {
  // Smallest m >= 1 with start * ratio^m <= tol.
  if (ratio == 0.0 || start <= tol) return 1;
  const double guess = std::ceil(std::log(tol / start) / std::log(ratio));
  if (!(guess < static_cast<double>(kMaxHorizon)))
    throw DomainError("horizon exceeds the simulation cap");
  auto m = static_cast<std::size_t>(std::max(1.0, guess));
  while (m > 1 && start * std::pow(ratio, static_cast<double>(m - 1)) <= tol) --m;
  while (start * std::pow(ratio, static_cast<double>(m)) > tol) ++m;
  return m;
}

}  // namespace

// --- coefficient families ---------------------------------------------------

void validate(const CoeffFamily& f) {
  std::visit(Overloaded{
                 [](const GeometricCoeffs& g) {
                   if (!(g.alpha1 >= 0.0) || !std::isfinite(g.alpha1))
                     throw DomainError("geometric coefficients: alpha1 must be finite and >= 0");
                   if (!(g.ratio >= 0.0 && g.ratio < 1.0))
                     throw DomainError("geometric coefficients: ratio must lie in [0, 1)");
                 },
                 [](const PolyDecayCoeffs& pd) {
                   if (!(pd.alpha1 >= 0.0) || !std::isfinite(pd.alpha1))
                     throw DomainError("polynomial coefficients: alpha1 must be finite and >= 0");
                   if (!(pd.exponent > 2.0))
                     throw DomainError("polynomial coefficients: sum i alpha_i diverges unless exponent > 2");
                 },
             },
             f);
}

double coefficient(const CoeffFamily& f, std::size_t i) {
  const auto x = static_cast<double>(i);
  return std::visit(Overloaded{
                        [&](const GeometricCoeffs& g) { return i == 1 ? g.alpha1 : g.alpha1 * std::pow(g.ratio, x - 1.0); },
                        [&](const PolyDecayCoeffs& pd) { return pd.alpha1 * std::pow(x, -pd.exponent); },
                    },
                    f);
}

double coeff_sum(const CoeffFamily& f) {
  return std::visit(Overloaded{
                        [](const GeometricCoeffs& g) { return g.alpha1 / (1.0 - g.ratio); },
                        [](const PolyDecayCoeffs& pd) { return pd.alpha1 * zeta(pd.exponent); },
                    },
                    f);
}

double coeff_tail(const CoeffFamily& f, std::size_t m) {
  const auto x = static_cast<double>(m);
  return std::visit(Overloaded{
                        [&](const GeometricCoeffs& g) { return g.alpha1 * std::pow(g.ratio, x) / (1.0 - g.ratio); },
                        [&](const PolyDecayCoeffs& pd) {
                          // integral bound: sum_{i>m} i^-s <= m^(1-s) / (s-1)
                          return pd.alpha1 * std::pow(x, 1.0 - pd.exponent) / (pd.exponent - 1.0);
                        },
                    },
                    f);
}

double coeff_square_sum(const CoeffFamily& f) {
  return std::visit(Overloaded{
                        [](const GeometricCoeffs& g) { return g.alpha1 * g.alpha1 / (1.0 - g.ratio * g.ratio); },
                        [](const PolyDecayCoeffs& pd) { return pd.alpha1 * pd.alpha1 * zeta(2.0 * pd.exponent); },
                    },
                    f);
}

double coeff_lag_product_sum(const CoeffFamily& f) {
  return std::visit(
      Overloaded{
          [](const GeometricCoeffs& g) { return g.alpha1 * g.alpha1 * g.ratio / (1.0 - g.ratio * g.ratio); },
          [](const PolyDecayCoeffs& pd) {
            const double s = pd.exponent;
            constexpr int kHead = 4096;
            double head = 0.0;
            for (int i = kHead - 1; i >= 1; --i) {
              const double x = i;
              head += std::pow(x * (x + 1.0), -s);
            }
            // (i(i+1))^-s = i^-2s (1 - s/i + s(s+1)/(2 i^2) - ...)
            const double tail = power_tail(2.0 * s, kHead) - s * power_tail(2.0 * s + 1.0, kHead) +
                                0.5 * s * (s + 1.0) * power_tail(2.0 * s + 2.0, kHead);
            return pd.alpha1 * pd.alpha1 * (head + tail);
          },
      },
      f);
}

// --- spectrum ---------------------------------------------------------------

Eigen::VectorXd Spectrum::weights(Index p) const {
  if (p < 1) throw DomainError("spectrum: dimension must be positive");
  if (kind == Kind::isotropic || p == 1) return Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p));
  if (!(effective_rank >= 1.0) || effective_rank > static_cast<double>(p))
    throw DomainError("spiked spectrum: effective rank must lie in [1, p]");
  Eigen::VectorXd w = Eigen::VectorXd::Constant(p, (1.0 - 1.0 / effective_rank) / static_cast<double>(p - 1));
  w[0] = 1.0 / effective_rank;
  return w;
}

double Spectrum::max_weight(Index p) const {
  if (kind == Kind::isotropic || p == 1) return 1.0 / static_cast<double>(p);
  return 1.0 / effective_rank;
}

// --- specs ------------------------------------------------------------------

double CbsSpec::envelope() const { return coeff_sum(coeffs) * innovation_bound; }

std::size_t CbsSpec::horizon() const {
  if (!(horizon_tol > 0.0)) throw DomainError("horizon_tol must be positive");
  return std::visit(
      Overloaded{
          [&](const GeometricCoeffs& g) {
            return geometric_steps(g.ratio, g.alpha1 * innovation_bound / (1.0 - g.ratio), horizon_tol);
          },
          [&](const PolyDecayCoeffs& pd) {
            const double scale = pd.alpha1 * innovation_bound / (pd.exponent - 1.0);
            if (scale <= horizon_tol) return std::size_t{1};
            const double m = std::ceil(std::pow(scale / horizon_tol, 1.0 / (pd.exponent - 1.0)));
            if (!(m < static_cast<double>(kMaxHorizon)))
              throw DomainError("horizon exceeds the simulation cap; raise horizon_tol");
            return static_cast<std::size_t>(m);
          },
      },
      coeffs);
}

double VarSpec::transition_norm() const { return spectral_norm(transition); }

double VarSpec::envelope() const { return innovation_bound / (1.0 - transition_norm()); }

std::size_t VarSpec::burn_in() const {
  if (!(horizon_tol > 0.0)) throw DomainError("horizon_tol must be positive");
  return geometric_steps(transition_norm(), envelope(), horizon_tol);
}

GeometricCoeffs VarSpec::coefficients() const { return cim_to_cbs(1.0, transition_norm()); }

void NoiseSpec::validate() const {
  if (dim < 1) throw DomainError("noise: dimension must be positive");
  std::visit(Overloaded{
                 [](const BoundedNoise& b) {
                   if (!(b.lambda >= 0.0) || !std::isfinite(b.lambda)) throw DomainError("bounded noise: lambda must be >= 0");
                 },
                 [](const PolyMomentNoise& pm) {
                   if (!(pm.k > 4.0)) throw DomainError("moment noise: order k must exceed 4");
                   if (!(pm.lambda > 0.0)) throw DomainError("moment noise: lambda must be positive");
                 },
                 [](const ExpMomentNoise& em) {
                   if (!(em.k > 0.0)) throw DomainError("exponential-moment noise: k must be positive");
                   if (!(em.lambda > 0.0)) throw DomainError("exponential-moment noise: lambda must be positive");
                 },
             },
             law);
}

double NoiseSpec::tail(double s) const {
  if (s <= 0.0) return 1.0;
  const double f = std::visit(Overloaded{
                                  [&](const BoundedNoise& b) { return s <= b.lambda * b.lambda ? 1.0 : 0.0; },
                                  [&](const PolyMomentNoise& pm) { return pm.lambda * std::pow(s, -0.5 * pm.k); },
                                  [&](const ExpMomentNoise& em) { return std::exp(-std::pow(s, 0.5 * em.k) / em.lambda); },
                              },
                              law);
  return std::clamp(f, 0.0, 1.0);
}

double NoiseSpec::second_moment() const { return radial_moment(*this, 2.0); }

double NoiseSpec::fourth_moment() const { return radial_moment(*this, 4.0); }

std::string NoiseSpec::label() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const BoundedNoise& b) { os << "bounded(lambda=" << b.lambda << ")"; },
                 [&](const PolyMomentNoise& pm) { os << "poly_moment(k=" << pm.k << ", lambda=" << pm.lambda << ")"; },
                 [&](const ExpMomentNoise& em) { os << "exp_moment(k=" << em.k << ", lambda=" << em.lambda << ")"; },
             },
             law);
  return os.str();
}

Index ProcessSpec::dim() const {
  return std::visit(Overloaded{[](const CbsSpec& c) { return c.dim; }, [](const VarSpec& v) { return v.dim(); }}, latent);
}

double ProcessSpec::envelope() const {
  return std::visit([](const auto& l) { return l.envelope(); }, latent);
}

double ProcessSpec::innovation_bound() const {
  return std::visit([](const auto& l) { return l.innovation_bound; }, latent);
}

CoeffFamily ProcessSpec::coefficients() const {
  return std::visit(Overloaded{[](const CbsSpec& c) { return c.coeffs; },
                               [](const VarSpec& v) { return CoeffFamily{v.coefficients()}; }},
                    latent);
}

void ProcessSpec::validate() const {
  std::visit([](const auto& l) { depmat::validate(l); }, latent);
  noise.validate();
  if (noise.dim != dim()) {
    std::ostringstream os;
    os << "process: latent dimension " << dim() << " does not match noise dimension " << noise.dim;
    throw DomainError(os.str());
  }
}

CbsSpec make_cbs(Index dim, CoeffFamily coeffs, double innovation_bound) {
  CbsSpec s;
  s.dim = dim;
  s.coeffs = coeffs;
  s.innovation_bound = innovation_bound;
  validate(s);
  return s;
}

void validate(const CbsSpec& spec) {
  if (spec.dim < 1) throw DomainError("cbs: dimension must be positive");
  validate(spec.coeffs);
  if (!(spec.innovation_bound > 0.0)) throw DomainError("cbs: innovation bound must be positive");
  if (!(spec.horizon_tol > 0.0)) throw DomainError("horizon_tol must be positive");
  spec.spectrum.weights(spec.dim);
}

void validate(const VarSpec& spec) {
  if (spec.transition.rows() < 1 || spec.transition.rows() != spec.transition.cols())
    throw DomainError("var: transition must be a non-empty square matrix");
  if (!(spec.transition_norm() < 1.0)) throw DomainError("var: transition norm must be < 1");
  if (!(spec.innovation_bound > 0.0)) throw DomainError("var: innovation bound must be positive");
  if (!(spec.horizon_tol > 0.0)) throw DomainError("horizon_tol must be positive");
  spec.spectrum.weights(spec.dim());
}

// --- simulation -------------------------------------------------------------

Path simulate_cbs(const CbsSpec& spec, std::size_t n, std::uint64_t seed) {
  validate(spec);
  if (n < 1) throw DomainError("simulate_cbs: n must be >= 1");
  const std::size_t m = spec.horizon();
  const Index p = spec.dim;
  const Eigen::VectorXd halfwidths = innovation_halfwidths(spec.spectrum, p, spec.innovation_bound);

  // xi.row(r) is xi_{r - m + 2}: rows 0..m-2 precede xi_1.
  Rng rng(seed);
  const std::size_t count = n + m - 1;
  Eigen::MatrixXd xi(static_cast<Index>(count), p);
  for (std::size_t r = 0; r < count; ++r) xi.row(static_cast<Index>(r)) = draw_innovation(rng, halfwidths).transpose();

  std::vector<double> alpha(m);
  for (std::size_t i = 1; i <= m; ++i) alpha[i - 1] = coefficient(spec.coeffs, i);

  Path x = Path::Zero(static_cast<Index>(n), p);
  for (std::size_t l = 0; l < n; ++l) {
    auto row = x.row(static_cast<Index>(l));
    for (std::size_t i = 1; i <= m; ++i) {
      if (alpha[i - 1] == 0.0) continue;
      row += alpha[i - 1] * xi.row(static_cast<Index>(l + m - i));
    }
  }
  return x;
}

Path simulate_var(const VarSpec& spec, std::size_t n, std::uint64_t seed) {
  validate(spec);
  if (n < 1) throw DomainError("simulate_var: n must be >= 1");
  const Index p = spec.dim();
  const Eigen::VectorXd halfwidths = innovation_halfwidths(spec.spectrum, p, spec.innovation_bound);
  const std::size_t burn = spec.burn_in();

  Rng rng(seed);
  Eigen::VectorXd state = Eigen::VectorXd::Zero(p);
  for (std::size_t i = 0; i < burn; ++i) state = spec.transition * state + draw_innovation(rng, halfwidths);

  Path x(static_cast<Index>(n), p);
  for (std::size_t l = 0; l < n; ++l) {
    state = spec.transition * state + draw_innovation(rng, halfwidths);
    x.row(static_cast<Index>(l)) = state.transpose();
  }
  return x;
}

Path simulate_latent(const LatentSpec& spec, std::size_t n, std::uint64_t seed) {
  return std::visit(Overloaded{[&](const CbsSpec& c) { return simulate_cbs(c, n, seed); },
                               [&](const VarSpec& v) { return simulate_var(v, n, seed); }},
                    spec);
}

Path simulate_noise(const NoiseSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  const Index p = spec.dim;
  Path eps = Path::Zero(static_cast<Index>(n), p);
  if (const auto* b = std::get_if<BoundedNoise>(&spec.law); b && b->lambda == 0.0) return eps;
  Rng rng(seed);
  for (std::size_t l = 0; l < n; ++l) {
    const double r = noise_radius(rng, spec);
    eps.row(static_cast<Index>(l)) = r * rng.unit_vector(p).transpose();
  }
  return eps;
}

Path simulate_observations(const ProcessSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  Path y = simulate_latent(spec.latent, n, split_seed(seed, 0));
  y += simulate_noise(spec.noise, n, split_seed(seed, 1));
  return y;
}

Path stationary_draws(const ProcessSpec& spec, std::size_t count, std::uint64_t seed) {
  spec.validate();
  const auto* cbs = std::get_if<CbsSpec>(&spec.latent);
  if (cbs == nullptr) throw DomainError("stationary_draws: only linear-filter CBS latents are supported");
  const std::size_t m = cbs->horizon();
  const Index p = cbs->dim;
  const Eigen::VectorXd halfwidths = innovation_halfwidths(cbs->spectrum, p, cbs->innovation_bound);
  std::vector<double> alpha(m);
  for (std::size_t i = 1; i <= m; ++i) alpha[i - 1] = coefficient(cbs->coeffs, i);

  Rng rng(split_seed(seed, 0));
  Path y = Path::Zero(static_cast<Index>(count), p);
  for (std::size_t r = 0; r < count; ++r) {
    auto row = y.row(static_cast<Index>(r));
    for (std::size_t i = 0; i < m; ++i) row += alpha[i] * draw_innovation(rng, halfwidths).transpose();
  }
  y += simulate_noise(spec.noise, count, split_seed(seed, 1));
  return y;
}

// --- dependence and tails ---------------------------------------------------

DependenceProfile gamma_profile(const CoeffFamily& coeffs, double envelope, double innovation_bound,
                                std::size_t n) {
  validate(coeffs);
  if (n < 1) throw DomainError("gamma_profile: n must be >= 1");
  const double scale = 4.0 * envelope * innovation_bound;
  DependenceProfile out;
  out.per_index.resize(n);
  const auto nn = static_cast<double>(n);

  std::visit(
      Overloaded{
          [&](const GeometricCoeffs& g) {
            const double q = g.ratio;
            const double beyond_n = nn * std::pow(q, nn) / (1.0 - q);  // n sum_{i>n} q^(i-1)
            const double upper = weighted_geometric_tail(q, nn + 1.0);
            for (std::size_t l = 1; l <= n; ++l) {
              const auto x = static_cast<double>(l);
              double s = 0.0;
              if (l < n)
                s = (weighted_geometric_tail(q, x + 1.0) - upper) + beyond_n;
              else
                s = nn * std::pow(q, x) / (1.0 - q);
              out.per_index[l - 1] = scale * g.alpha1 * std::max(s, 0.0);
            }
            out.cap = scale * g.alpha1 * weighted_geometric_tail(q, 2.0);
          },
          [&](const PolyDecayCoeffs& pd) {
            const double s = pd.exponent;
            // l = n: n sum_{i>n} alpha_i; then Gamma_l = Gamma_{l+1} + (l+1) alpha_{l+1}.
            double acc = nn * pd.alpha1 * power_tail(s, nn + 1.0);
            out.per_index[n - 1] = scale * acc;
            for (std::size_t l = n - 1; l >= 1; --l) {
              const double i = static_cast<double>(l + 1);
              acc += i * pd.alpha1 * std::pow(i, -s);
              out.per_index[l - 1] = scale * acc;
            }
            out.cap = scale * pd.alpha1 * (zeta(s - 1.0) - 1.0);
          },
      },
      coeffs);
  out.max = out.per_index.front();
  return out;
}

DependenceProfile gamma_profile(const CbsSpec& spec, std::size_t n) {
  validate(spec);
  return gamma_profile(spec.coeffs, spec.envelope(), spec.innovation_bound, n);
}

DependenceProfile gamma_profile(const ProcessSpec& spec, std::size_t n) {
  spec.validate();
  return gamma_profile(spec.coefficients(), spec.envelope(), spec.innovation_bound(), n);
}

double TailModel::operator()(double t) const {
  const double f = std::visit(
      Overloaded{
          [&](const BoundedTail& b) { return t < b.kappa2 ? 1.0 : 0.0; },
          [&](const ExpDecayTail& e) { return t <= 0.0 ? 1.0 : std::exp(-e.a * std::pow(t, e.b)); },
          [&](const PolyDecayTail& pd) { return t <= 0.0 ? 1.0 : pd.a * std::pow(t, -pd.b); },
          [&](const CompositeTail& c) {
            return (t <= 4.0 * c.envelope * c.envelope ? 1.0 : 0.0) + c.noise.tail(t / 4.0);
          },
      },
      regime);
  return std::clamp(f, 0.0, 1.0);
}

std::string TailModel::label() const {
  return std::visit(Overloaded{[](const BoundedTail&) { return std::string("bounded"); },
                               [](const ExpDecayTail&) { return std::string("exp_decay"); },
                               [](const PolyDecayTail&) { return std::string("poly_decay"); },
                               [](const CompositeTail&) { return std::string("composite"); }},
                    regime);
}

TailModel tail_model(const ProcessSpec& spec) {
  spec.validate();
  const double b = spec.envelope();
  TailModel tm;
  tm.regime = CompositeTail{b, spec.noise};
  // E||Y||^4 <= 8 (B^4 + E||eps||^4)
  tm.moment_bound = std::sqrt(8.0 * (std::pow(b, 4.0) + spec.noise.fourth_moment()));
  tm.moment_note = "upper bound, not tight: V^2 = 8 (B^4 + E||eps||^4)";
  return tm;
}

GeometricCoeffs cim_to_cbs(double beta0, double contraction) {
  if (!(beta0 > 0.0)) throw DomainError("cim_to_cbs: beta0 must be positive");
  if (!(contraction >= 0.0 && contraction < 1.0))
    throw DomainError("cim_to_cbs: a chain with infinite memory needs contraction < 1");
  return {beta0, contraction};
}

CbsSpec var_as_cim(double a_norm, double noise_bound, Index dim) {
  if (!(a_norm >= 0.0 && a_norm < 1.0)) throw DomainError("var_as_cim: ||A|| must lie in [0, 1)");
  return make_cbs(dim, cim_to_cbs(1.0, a_norm), noise_bound);
}

// --- population moments -----------------------------------------------------

SymMatrix stationary_covariance(const Eigen::MatrixXd& transition, const SymMatrix& innovation_cov) {
  Eigen::MatrixXd term = innovation_cov.matrix();
  Eigen::MatrixXd sum = term;
  for (int k = 0; k < 100000; ++k) {
    term = transition * term * transition.transpose();
    sum += term;
    if (term.norm() <= 1e-17 * sum.norm()) return SymMatrix(0.5 * (sum + sum.transpose()));
  }
  throw NumericalError("stationary_covariance: series did not converge", term.norm());
}

PopulationMoments population_moments(const ProcessSpec& spec) {
  spec.validate();
  const Index p = spec.dim();
  const double noise_var = spec.noise.second_moment() / static_cast<double>(p);
  PopulationMoments out;

  if (const auto* cbs = std::get_if<CbsSpec>(&spec.latent)) {
    const double level = cbs->innovation_bound * cbs->innovation_bound / 3.0;
    const double sq = coeff_square_sum(cbs->coeffs);
    const double lag = coeff_lag_product_sum(cbs->coeffs);
    const Eigen::VectorXd w = cbs->spectrum.weights(p);
    Eigen::VectorXd diag = (sq * level) * w;
    diag.array() += noise_var;
    out.sigma = SymMatrix::diagonal(diag);
    out.lag1 = Eigen::MatrixXd((lag * level * w).asDiagonal());
    // Closed form: identical across p whenever the spectrum shape is.
    out.sigma_norm = sq * level * cbs->spectrum.max_weight(p) + noise_var;
    out.trace = sq * level + spec.noise.second_moment();
    out.eff_rank = out.trace / out.sigma_norm;
  } else {
    const auto& var = std::get<VarSpec>(spec.latent);
    const Eigen::VectorXd w = var.spectrum.weights(p);
    const double level = var.innovation_bound * var.innovation_bound / 3.0;
    const SymMatrix latent = stationary_covariance(var.transition, SymMatrix::diagonal(level * w));
    out.sigma = latent + noise_var * SymMatrix::identity(p);
    out.lag1 = var.transition * latent.matrix();
    out.sigma_norm = operator_norm(out.sigma);
    out.trace = out.sigma.trace();
    out.eff_rank = effective_rank(out.sigma);
  }
  return out;
}

}  // namespace depmat
