// SPDX-License-Identifier: Apache-2.0

#ifndef DROBAS_CONJUGATE_MODELS_HPP
#define DROBAS_CONJUGATE_MODELS_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "drobas/digamma.hpp"
#include "drobas/quadrature.hpp"
#include "drobas/random.hpp"

/// Conjugate Bayesian inference for three one-dimensional likelihoods:
///
///   GaussKnownVar  xi ~ N(mu, sigma^2),   mu ~ N(mu_n, sigma_n^2)
///   NormalGamma    xi ~ N(mu, 1/lambda),  (mu, lambda) ~ NG(mu_n, kappa_n, alpha_n, beta_n)
///   ExpGamma       xi ~ Exp(theta),       theta ~ Gamma(alpha_n, beta_n)   (rate form)
///
/// For each family the posterior-expected log-likelihood collapses onto a
/// single "center" member of the family:
///
///   E_post[ln p(xi | theta)] = ln p(xi | center) - gap(posterior)
///
/// so the posterior-expected KL divergence from any Q equals KL(Q || center)
/// plus the same nonnegative gap. The gap is the smallest tolerance for which
/// the expected-KL ambiguity set is non-empty.
namespace drobas {

enum class Family { GaussKnownVar, NormalGamma, ExpGamma };

inline std::string_view to_string(Family family) {
  switch (family) {
    case Family::GaussKnownVar:
      return "gauss-known-var";
    case Family::NormalGamma:
      return "normal-gamma";
    case Family::ExpGamma:
      return "exp-gamma";
  }
  return "unknown";
}

inline Family parse_family(std::string_view name) {
  if (name == "gauss-known-var") return Family::GaussKnownVar;
  if (name == "normal-gamma") return Family::NormalGamma;
  if (name == "exp-gamma") return Family::ExpGamma;
  throw std::invalid_argument("unknown model family '" + std::string(name) +
                              "' (expected gauss-known-var, normal-gamma or exp-gamma)");
}

class ModelSpec {
 public:
  static ModelSpec gauss_known_variance(double variance) {
    if (!(variance > 0.0) || !std::isfinite(variance)) {
      throw std::domain_error("known variance must be finite and > 0");
    }
    return ModelSpec{Family::GaussKnownVar, variance};
  }
  static ModelSpec normal_gamma() { return ModelSpec{Family::NormalGamma, std::nullopt}; }
  static ModelSpec exp_gamma() { return ModelSpec{Family::ExpGamma, std::nullopt}; }

  Family family() const { return family_; }

  double known_variance() const {
    if (!known_variance_) {
      throw std::logic_error("known_variance is only defined for the gauss-known-var family");
    }
    return *known_variance_;
  }

 private:
  ModelSpec(Family family, std::optional<double> known_variance)
      : family_{family}, known_variance_{known_variance} {}

  Family family_;
  std::optional<double> known_variance_;
};

// Hyperparameters. Priors and posteriors share the same shapes.

/// mu ~ N(mean, variance).
struct GaussianHyper {
  double mean = 0.0;
  double variance = 1.0;
};

/// mu | lambda ~ N(mu, 1 / (kappa lambda)),  lambda ~ Gamma(alpha, rate = beta).
struct NormalGammaHyper {
  double mu = 0.0;
  double kappa = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
};

/// theta ~ Gamma(alpha, rate = beta).
struct GammaHyper {
  double alpha = 1.0;
  double beta = 1.0;
};

using Hyper = std::variant<GaussianHyper, NormalGammaHyper, GammaHyper>;

struct PosteriorState {
  Hyper hyper;
  std::size_t n = 0;
};

// Parameters of a single member of a likelihood family. Used for the center
// distribution, for posterior draws and for the true data-generating law.

struct GaussianParams {
  double mean = 0.0;
  double variance = 1.0;
};

struct ExponentialParams {
  double rate = 1.0;
};

using Params = std::variant<GaussianParams, ExponentialParams>;

/// Monte Carlo (or quadrature) estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

namespace detail {

inline void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::domain_error(std::string(what) + " must be finite and > 0");
  }
}

inline void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

template <class T>
const T& hyper_as(const ModelSpec& spec, const Hyper& hyper) {
  const auto* typed = std::get_if<T>(&hyper);
  if (typed == nullptr) {
    throw std::invalid_argument("hyperparameters do not match model family " +
                                std::string(to_string(spec.family())));
  }
  return *typed;
}

inline double mean_of(std::span<const double> data) {
  double sum = 0.0;
  for (const double x : data) sum += x;
  return sum / static_cast<double>(data.size());
}

}  // namespace detail

/// Throws unless the hyperparameters match the family and are in range.
inline void validate(const ModelSpec& spec, const Hyper& hyper) {
  switch (spec.family()) {
    case Family::GaussKnownVar: {
      const auto& h = detail::hyper_as<GaussianHyper>(spec, hyper);
      detail::require_finite(h.mean, "mean hyperparameter");
      detail::require_positive(h.variance, "variance hyperparameter");
      break;
    }
    case Family::NormalGamma: {
      const auto& h = detail::hyper_as<NormalGammaHyper>(spec, hyper);
      detail::require_finite(h.mu, "mu hyperparameter");
      detail::require_positive(h.kappa, "kappa hyperparameter");
      detail::require_positive(h.alpha, "alpha hyperparameter");
      detail::require_positive(h.beta, "beta hyperparameter");
      break;
    }
    case Family::ExpGamma: {
      const auto& h = detail::hyper_as<GammaHyper>(spec, hyper);
      detail::require_positive(h.alpha, "alpha hyperparameter");
      detail::require_positive(h.beta, "beta hyperparameter");
      break;
    }
  }
}

inline void validate(const Params& params) {
  if (const auto* g = std::get_if<GaussianParams>(&params)) {
    detail::require_finite(g->mean, "mean");
    detail::require_positive(g->variance, "variance");
  } else {
    detail::require_positive(std::get<ExponentialParams>(params).rate, "rate");
  }
}

/// Batch conjugate update. An empty batch returns the prior unchanged.
inline PosteriorState update_posterior(const ModelSpec& spec, const Hyper& prior,
                                       std::span<const double> data) {
  validate(spec, prior);
  for (const double x : data) {
    detail::require_finite(x, "observation");
    if (spec.family() == Family::ExpGamma && !(x > 0.0)) {
      throw std::domain_error("exp-gamma observations must be > 0");
    }
  }
  if (data.empty()) {
    return PosteriorState{prior, 0};
  }
  const auto n = static_cast<double>(data.size());
  const double sample_mean = detail::mean_of(data);
  switch (spec.family()) {
    case Family::GaussKnownVar: {
      const auto& p = std::get<GaussianHyper>(prior);
      const double sigma2 = spec.known_variance();
      const double denom = n * p.variance + sigma2;
      GaussianHyper post;
      post.mean = (sigma2 / denom) * p.mean + (n * p.variance / denom) * sample_mean;
      post.variance = 1.0 / (1.0 / p.variance + n / sigma2);
      return PosteriorState{post, data.size()};
    }
    case Family::NormalGamma: {
      const auto& p = std::get<NormalGammaHyper>(prior);
      double scatter = 0.0;
      for (const double x : data) scatter += (x - sample_mean) * (x - sample_mean);
      NormalGammaHyper post;
      post.kappa = p.kappa + n;
      post.mu = (p.kappa * p.mu + n * sample_mean) / post.kappa;
      post.alpha = p.alpha + 0.5 * n;
      post.beta = p.beta + 0.5 * scatter +
                  p.kappa * n * (sample_mean - p.mu) * (sample_mean - p.mu) / (2.0 * post.kappa);
      return PosteriorState{post, data.size()};
    }
    case Family::ExpGamma: {
      const auto& p = std::get<GammaHyper>(prior);
      return PosteriorState{GammaHyper{p.alpha + n, p.beta + n * sample_mean}, data.size()};
    }
  }
  throw std::logic_error("unreachable");
}

/// Parameters of the center distribution p(xi | theta_bar_n).
inline Params theta_bar(const ModelSpec& spec, const PosteriorState& post) {
  switch (spec.family()) {
    case Family::GaussKnownVar: {
      const auto& h = detail::hyper_as<GaussianHyper>(spec, post.hyper);
      return GaussianParams{h.mean, spec.known_variance()};
    }
    case Family::NormalGamma: {
      const auto& h = detail::hyper_as<NormalGammaHyper>(spec, post.hyper);
      return GaussianParams{h.mu, h.beta / h.alpha};
    }
    case Family::ExpGamma: {
      const auto& h = detail::hyper_as<GammaHyper>(spec, post.hyper);
      return ExponentialParams{h.alpha / h.beta};
    }
  }
  throw std::logic_error("unreachable");
}

/// G(tau_n): expected KL minus KL to the center. Always >= 0.
inline double gap(const ModelSpec& spec, const PosteriorState& post) {
  switch (spec.family()) {
    case Family::GaussKnownVar: {
      const auto& h = detail::hyper_as<GaussianHyper>(spec, post.hyper);
      return h.variance / (2.0 * spec.known_variance());
    }
    case Family::NormalGamma: {
      const auto& h = detail::hyper_as<NormalGammaHyper>(spec, post.hyper);
      return 0.5 * (1.0 / h.kappa + log_minus_digamma(h.alpha));
    }
    case Family::ExpGamma: {
      const auto& h = detail::hyper_as<GammaHyper>(spec, post.hyper);
      return log_minus_digamma(h.alpha);
    }
  }
  throw std::logic_error("unreachable");
}

/// Smallest tolerance giving a non-empty ambiguity set; identical to gap().
inline double epsilon_min(const ModelSpec& spec, const PosteriorState& post) {
  return gap(spec, post);
}

inline double log_likelihood(const Params& theta, double xi) {
  if (const auto* g = std::get_if<GaussianParams>(&theta)) {
    const double d = xi - g->mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * g->variance) - 0.5 * d * d / g->variance;
  }
  const double rate = std::get<ExponentialParams>(theta).rate;
  if (xi < 0.0) {
    return -std::numeric_limits<double>::infinity();
  }
  return std::log(rate) - rate * xi;
}

/// KL(p || q) between two members of the same family.
inline double kl_divergence(const Params& p, const Params& q) {
  validate(p);
  validate(q);
  if (p.index() != q.index()) {
    throw std::invalid_argument("kl_divergence: distributions belong to different families");
  }
  if (const auto* gp = std::get_if<GaussianParams>(&p)) {
    const auto& gq = std::get<GaussianParams>(q);
    const double d = gp->mean - gq.mean;
    return 0.5 * (std::log(gq.variance / gp->variance) + (gp->variance + d * d) / gq.variance - 1.0);
  }
  const double rp = std::get<ExponentialParams>(p).rate;
  const double rq = std::get<ExponentialParams>(q).rate;
  return std::log(rp / rq) + rq / rp - 1.0;
}

namespace detail {

inline void require_truth_matches(const ModelSpec& spec, const Params& truth) {
  validate(truth);
  const bool gaussian = std::holds_alternative<GaussianParams>(truth);
  if ((spec.family() == Family::ExpGamma) == gaussian) {
    throw std::domain_error("true parameters do not belong to the model family " +
                            std::string(to_string(spec.family())));
  }
  if (spec.family() == Family::GaussKnownVar &&
      std::get<GaussianParams>(truth).variance != spec.known_variance()) {
    throw std::domain_error("gauss-known-var truth must use the model's known variance");
  }
}

}  // namespace detail

/// Radius that just contains the true law P* in the well-specified case:
/// KL(P* || center) + gap.
inline double epsilon_star(const ModelSpec& spec, const PosteriorState& post, const Params& truth) {
  detail::require_truth_matches(spec, truth);
  return kl_divergence(truth, theta_bar(spec, post)) + gap(spec, post);
}

/// Plug-in estimate of the true law from data: sample mean (and unbiased
/// sample variance for NormalGamma), or reciprocal sample mean for ExpGamma.
inline Params plugin_truth(const ModelSpec& spec, std::span<const double> data) {
  if (data.empty()) {
    throw std::invalid_argument("plug-in estimate needs at least one observation");
  }
  for (const double x : data) detail::require_finite(x, "observation");
  const double mean = detail::mean_of(data);
  switch (spec.family()) {
    case Family::GaussKnownVar:
      return GaussianParams{mean, spec.known_variance()};
    case Family::NormalGamma: {
      if (data.size() < 2) {
        throw std::domain_error("plug-in precision needs at least two observations");
      }
      double scatter = 0.0;
      for (const double x : data) scatter += (x - mean) * (x - mean);
      const double variance = scatter / static_cast<double>(data.size() - 1);
      if (!(variance > 0.0)) {
        throw std::domain_error("plug-in precision undefined: sample variance is zero");
      }
      return GaussianParams{mean, variance};
    }
    case Family::ExpGamma:
      if (!(mean > 0.0)) {
        throw std::domain_error("plug-in rate undefined: sample mean must be > 0");
      }
      return ExponentialParams{1.0 / mean};
  }
  throw std::logic_error("unreachable");
}

inline double epsilon_star_plugin(const ModelSpec& spec, const PosteriorState& post,
                                  std::span<const double> data) {
  return epsilon_star(spec, post, plugin_truth(spec, data));
}

inline double draw(const Params& params, Rng& rng) {
  if (const auto* g = std::get_if<GaussianParams>(&params)) {
    return std::normal_distribution<double>{g->mean, std::sqrt(g->variance)}(rng);
  }
  return std::exponential_distribution<double>{std::get<ExponentialParams>(params).rate}(rng);
}

/// i.i.d. draws from a single family member (typically the center).
inline std::vector<double> sample_center(const Params& center, std::size_t count, Rng& rng) {
  validate(center);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(draw(center, rng));
  return out;
}

/// Draws likelihood parameters theta ~ posterior, one at a time.
class PosteriorSampler {
 public:
  PosteriorSampler(const ModelSpec& spec, const PosteriorState& post) : family_{spec.family()} {
    validate(spec, post.hyper);
    switch (family_) {
      case Family::GaussKnownVar: {
        const auto& h = std::get<GaussianHyper>(post.hyper);
        location_ = h.mean;
        spread_ = std::sqrt(h.variance);
        known_variance_ = spec.known_variance();
        break;
      }
      case Family::NormalGamma: {
        const auto& h = std::get<NormalGammaHyper>(post.hyper);
        location_ = h.mu;
        spread_ = h.kappa;
        gamma_ = std::gamma_distribution<double>{h.alpha, 1.0 / h.beta};
        break;
      }
      case Family::ExpGamma: {
        const auto& h = std::get<GammaHyper>(post.hyper);
        gamma_ = std::gamma_distribution<double>{h.alpha, 1.0 / h.beta};
        break;
      }
    }
  }

  Params operator()(Rng& rng) {
    switch (family_) {
      case Family::GaussKnownVar:
        return GaussianParams{location_ + spread_ * unit_(rng), known_variance_};
      case Family::NormalGamma: {
        // lambda ~ Gamma(alpha, beta), then mu | lambda ~ N(mu_n, 1 / (kappa lambda)).
        const double lambda = gamma_(rng);
        const double mu = location_ + unit_(rng) / std::sqrt(spread_ * lambda);
        return GaussianParams{mu, 1.0 / lambda};
      }
      case Family::ExpGamma:
        return ExponentialParams{gamma_(rng)};
    }
    throw std::logic_error("unreachable");
  }

 private:
  Family family_;
  double location_ = 0.0;
  double spread_ = 1.0;
  double known_variance_ = 1.0;
  std::gamma_distribution<double> gamma_;
  std::normal_distribution<double> unit_;
};

inline std::vector<Params> sample_posterior_params(const ModelSpec& spec,
                                                   const PosteriorState& post, std::size_t count,
                                                   Rng& rng) {
  PosteriorSampler sampler{spec, post};
  std::vector<Params> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sampler(rng));
  return out;
}

namespace detail {

template <class Fn>
Estimate monte_carlo(std::size_t count, Fn&& sample) {
  if (count < 2) {
    throw std::invalid_argument("Monte Carlo estimate needs at least two samples");
  }
  // Welford running moments.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double x = sample();
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  const double variance = m2 / static_cast<double>(count - 1);
  return Estimate{mean, std::sqrt(variance / static_cast<double>(count)), count};
}

}  // namespace detail

struct IdentityBudget {
  int quadrature_nodes = 64;
  std::size_t mc_samples = 1'000'000;
};

/// E_post[ln p(xi | theta)] - (ln p(xi | center) - gap), which is zero for the
/// three conjugate families.
///
/// GaussKnownVar integrates over mu with Gauss-Hermite quadrature and reports
/// a zero standard error; the other families use Monte Carlo over posterior
/// draws.
inline Estimate identity_residual(const ModelSpec& spec, const PosteriorState& post, double xi,
                                  const IdentityBudget& budget, Rng& rng) {
  detail::require_finite(xi, "xi");
  const double target = log_likelihood(theta_bar(spec, post), xi) - gap(spec, post);
  switch (spec.family()) {
    case Family::GaussKnownVar: {
      const auto& h = std::get<GaussianHyper>(post.hyper);
      const double sigma2 = spec.known_variance();
      const auto rule = gauss_hermite(budget.quadrature_nodes);
      const double expected = gaussian_expectation(rule, h.mean, h.variance, [&](double mu) {
        return log_likelihood(GaussianParams{mu, sigma2}, xi);
      });
      return Estimate{expected - target, 0.0, static_cast<std::size_t>(budget.quadrature_nodes)};
    }
    case Family::NormalGamma:
    case Family::ExpGamma: {
      PosteriorSampler sampler{spec, post};
      return detail::monte_carlo(budget.mc_samples,
                                 [&] { return log_likelihood(sampler(rng), xi) - target; });
    }
  }
  throw std::logic_error("unreachable");
}

/// Monte Carlo estimate of E_post[KL(q || p_theta)].
inline Estimate expected_kl_monte_carlo(const ModelSpec& spec, const PosteriorState& post,
                                        const Params& q, std::size_t count, Rng& rng) {
  validate(q);
  PosteriorSampler sampler{spec, post};
  return detail::monte_carlo(count, [&] { return kl_divergence(q, sampler(rng)); });
}

}  // namespace drobas

#endif
