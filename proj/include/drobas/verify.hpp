// SPDX-License-Identifier: Apache-2.0

#ifndef DROBAS_VERIFY_HPP
#define DROBAS_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "drobas/conjugate_models.hpp"
#include "drobas/digamma.hpp"
#include "drobas/dual_solver.hpp"
#include "drobas/newsvendor.hpp"
#include "drobas/random.hpp"
#include "drobas/reference.hpp"

/// Self-checks run by `drobas verify`: the predictive identity, the expected-KL
/// decomposition, the dual solvers against brute-force grids, and the
/// shared-multiplier upper bound.
namespace drobas::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  double statistic = 0.0;  // worst observed value of the check's metric
  double threshold = 0.0;
  std::string detail;
};

struct Budget {
  std::size_t posteriors = 20;
  std::size_t xi_points = 5;
  std::size_t mc_samples = 1'000'000;
  std::size_t lemma_queries = 10;
  std::size_t gamma_instances = 100;
  int gamma_grid_points = 10000;
  std::size_t joint_instances = 20;
  int joint_grid_points = 400;
  std::size_t bound_replicates = 20;
  std::size_t bound_side = 60;
  double z_limit = 4.0;
  double joint_tolerance = 1e-4;

  static Budget quick() {
    Budget b;
    b.posteriors = 4;
    b.xi_points = 2;
    b.mc_samples = 100'000;
    b.lemma_queries = 3;
    b.gamma_instances = 20;
    b.gamma_grid_points = 2000;
    b.joint_instances = 2;
    b.joint_grid_points = 150;
    b.bound_replicates = 8;
    b.bound_side = 30;
    b.z_limit = 5.0;
    b.joint_tolerance = 1e-3;
    return b;
  }
};

struct Options {
  Budget budget;
  std::uint64_t seed = 0;
  bool flip_exp_gamma_gap = false;  // mutation canary for the identity check
};

namespace detail {

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>{lo, hi}(rng);
}

/// Posterior from a random prior and 0..30 synthetic observations.
inline PosteriorState random_posterior(const ModelSpec& spec, Rng& rng) {
  std::vector<double> data(std::uniform_int_distribution<std::size_t>{0, 30}(rng));
  switch (spec.family()) {
    case Family::GaussKnownVar: {
      std::normal_distribution<double> gen{uniform(rng, -5, 5), std::sqrt(spec.known_variance())};
      for (auto& x : data) x = gen(rng);
      return update_posterior(spec, GaussianHyper{uniform(rng, -5, 5), uniform(rng, 0.5, 5)}, data);
    }
    case Family::NormalGamma: {
      std::normal_distribution<double> gen{uniform(rng, -5, 5), uniform(rng, 0.5, 3)};
      for (auto& x : data) x = gen(rng);
      const NormalGammaHyper prior{uniform(rng, -5, 5), uniform(rng, 0.5, 3), uniform(rng, 0.5, 5),
                                   uniform(rng, 0.5, 5)};
      return update_posterior(spec, prior, data);
    }
    case Family::ExpGamma: {
      std::exponential_distribution<double> gen{uniform(rng, 0.2, 3)};
      for (auto& x : data) x = gen(rng);
      return update_posterior(spec, GammaHyper{uniform(rng, 0.5, 5), uniform(rng, 0.5, 5)}, data);
    }
  }
  throw std::logic_error("unreachable");
}

/// Observation points spread over the bulk of the center distribution.
inline double random_xi(const Params& center, Rng& rng) {
  if (const auto* g = std::get_if<GaussianParams>(&center)) {
    return g->mean + uniform(rng, -3, 3) * std::sqrt(g->variance);
  }
  return uniform(rng, 0.05, 4.0) / std::get<ExponentialParams>(center).rate;
}

inline Params random_query(const ModelSpec& spec, Rng& rng) {
  if (spec.family() == Family::ExpGamma) return ExponentialParams{std::exp(uniform(rng, -1.5, 1.5))};
  return GaussianParams{uniform(rng, -5, 5), std::exp(uniform(rng, -1.5, 1.5))};
}

inline std::string format_stat(const char* label, double value) {
  std::ostringstream out;
  out << label << value;
  return out.str();
}

}  // namespace detail

inline CheckResult check_digamma_recurrence(std::size_t points = 400) {
  CheckResult r{"digamma recurrence", true, 0.0, 1e-13, {}};
  for (std::size_t i = 0; i < points; ++i) {
    const double z = std::pow(10.0, -3.0 + 9.0 * static_cast<double>(i) / static_cast<double>(points - 1));
    const double a = digamma(z + 1.0);
    const double b = digamma(z);
    const double scale = std::max({1.0, std::abs(a), std::abs(b), 1.0 / z});
    r.statistic = std::max(r.statistic, std::abs(a - b - 1.0 / z) / scale);
  }
  r.passed = r.statistic <= r.threshold;
  r.detail = std::to_string(points) + " log-spaced points in [1e-3, 1e6], residual scaled by max(1, |terms|)";
  return r;
}

/// Predictive identity E_post[ln p(xi|theta)] = ln p(xi|center) - G.
inline CheckResult check_identity(const ModelSpec& spec, const Options& opts) {
  const auto& b = opts.budget;
  auto rng = make_stream(opts.seed, Stream::Verify, {1, static_cast<std::uint64_t>(spec.family())});
  CheckResult r{"identity residual (" + std::string(to_string(spec.family())) + ")", true, 0.0, 0.0, {}};
  const bool quadrature = spec.family() == Family::GaussKnownVar;
  r.threshold = quadrature ? 1e-8 : b.z_limit;
  const IdentityBudget ib{64, b.mc_samples};
  for (std::size_t p = 0; p < b.posteriors; ++p) {
    const auto post = detail::random_posterior(spec, rng);
    const auto center = theta_bar(spec, post);
    for (std::size_t k = 0; k < b.xi_points; ++k) {
      const double xi = detail::random_xi(center, rng);
      auto est = identity_residual(spec, post, xi, ib, rng);
      if (opts.flip_exp_gamma_gap && spec.family() == Family::ExpGamma) {
        est.value -= 2.0 * gap(spec, post);
      }
      const double metric = quadrature ? std::abs(est.value) : std::abs(est.value) / est.std_error;
      r.statistic = std::max(r.statistic, metric);
    }
  }
  r.passed = r.statistic <= r.threshold;
  r.detail = std::to_string(b.posteriors) + " posteriors x " + std::to_string(b.xi_points) + " xi; " +
             (quadrature ? "max |residual|, Gauss-Hermite"
                         : "max |residual| / SE at " + std::to_string(b.mc_samples) + " draws");
  return r;
}

/// E_post[KL(Q || p_theta)] = KL(Q || center) + G.
inline CheckResult check_expected_kl(const ModelSpec& spec, const Options& opts) {
  const auto& b = opts.budget;
  auto rng = make_stream(opts.seed, Stream::Verify, {2, static_cast<std::uint64_t>(spec.family())});
  CheckResult r{"expected-KL decomposition (" + std::string(to_string(spec.family())) + ")", true, 0.0,
                b.z_limit, {}};
  for (std::size_t i = 0; i < b.lemma_queries; ++i) {
    const auto post = detail::random_posterior(spec, rng);
    const auto q = detail::random_query(spec, rng);
    const auto est = expected_kl_monte_carlo(spec, post, q, b.mc_samples, rng);
    const double closed = kl_divergence(q, theta_bar(spec, post)) + gap(spec, post);
    r.statistic = std::max(r.statistic, std::abs(est.value - closed) / est.std_error);
  }
  r.passed = r.statistic <= r.threshold;
  r.detail = std::to_string(b.lemma_queries) + " random (posterior, Q) pairs; max |MC - closed form| / SE";
  return r;
}

/// minimize_gamma against a dense log-grid, relative value error.
inline CheckResult check_gamma_oracle(const Options& opts) {
  const auto& b = opts.budget;
  auto rng = make_stream(opts.seed, Stream::Verify, {3});
  CheckResult r{"minimize_gamma vs log-grid", true, 0.0, 1e-6, {}};
  for (std::size_t i = 0; i < b.gamma_instances; ++i) {
    const auto n = std::uniform_int_distribution<std::size_t>{2, 60}(rng);
    const double scale = std::exp(detail::uniform(rng, -2, 2));
    std::vector<double> f(n);
    for (auto& v : f) v = detail::uniform(rng, 0, scale);
    const double slack = detail::uniform(rng, 1e-3, 1.2 * std::log(static_cast<double>(n)));
    const double g = detail::uniform(rng, 0, 0.2);
    const auto got = minimize_gamma(f, AmbiguitySpec{g + slack, g});
    const auto ref = reference::gamma_grid_search(f, slack, b.gamma_grid_points, 1e-8, 1e8, 2);
    r.statistic = std::max(r.statistic, std::abs(got.value - ref.value) / std::abs(ref.value));
  }
  r.passed = r.statistic <= r.threshold;
  r.detail = std::to_string(b.gamma_instances) + " random instances; max relative value difference";
  return r;
}

/// solve_dro_bas against a brute-force (x, gamma) grid on newsvendor instances.
inline CheckResult check_joint_oracle(const Options& opts) {
  const auto& b = opts.budget;
  auto rng = make_stream(opts.seed, Stream::Verify, {4});
  CheckResult r{"solve_dro_bas vs (x, gamma) grid", true, 0.0, b.joint_tolerance, {}};
  const auto oracle = newsvendor_oracle(1.0, 2.0);
  std::normal_distribution<double> demand{25.0, 10.0};
  for (std::size_t i = 0; i < b.joint_instances; ++i) {
    std::vector<double> samples(25);
    for (auto& s : samples) s = demand(rng);
    const double slack = detail::uniform(rng, 0.02, 2.5);
    const auto sol = solve_dro_bas(oracle, samples, AmbiguitySpec{0.047 + slack, 0.047}, Interval{0, 50});
    const auto ref =
        reference::joint_grid_search(oracle.cost, samples, slack, 0.0, 50.0, b.joint_grid_points);
    r.statistic = std::max(r.statistic, std::abs(sol.value - ref.value));
  }
  r.passed = r.statistic <= r.threshold;
  r.detail = std::to_string(b.joint_instances) + " newsvendor instances, N = 25; max |value difference|";
  return r;
}

/// The shared-multiplier bound over posterior draws is never below the
/// conjugate dual at the same epsilon, up to Monte Carlo error.
inline CheckResult check_upper_bound(const ModelSpec& spec, const Options& opts) {
  const auto& b = opts.budget;
  auto rng = make_stream(opts.seed, Stream::Verify, {5, static_cast<std::uint64_t>(spec.family())});
  CheckResult r{"shared-multiplier bound >= dual (" + std::string(to_string(spec.family())) + ")", true,
                0.0, b.z_limit, {}};
  const auto post = detail::random_posterior(spec, rng);
  const auto center = theta_bar(spec, post);
  const double g = gap(spec, post);
  const double eps = g + 0.5;
  const double x = std::holds_alternative<GaussianParams>(center)
                       ? std::get<GaussianParams>(center).mean
                       : 1.0 / std::get<ExponentialParams>(center).rate;
  const auto cost = [x](double xi) { return newsvendor_cost(x, xi, 1.0, 2.0); };
  const std::size_t side = b.bound_side;
  std::vector<double> diffs;
  PosteriorSampler sampler{spec, post};
  for (std::size_t rep = 0; rep < b.bound_replicates; ++rep) {
    std::vector<std::vector<double>> costs(side);
    for (auto& row : costs) {
      const auto theta = sampler(rng);
      for (std::size_t k = 0; k < side; ++k) row.push_back(cost(draw(theta, rng)));
    }
    const std::vector<std::span<const double>> rows(costs.begin(), costs.end());
    std::vector<double> f;
    for (const double xi : sample_center(center, side * side, rng)) f.push_back(cost(xi));
    diffs.push_back(minimize_general_upper_bound(rows, eps).value -
                    minimize_gamma(f, AmbiguitySpec{eps, g}).value);
  }
  const auto n = static_cast<double>(diffs.size());
  double mean = 0.0;
  for (const double d : diffs) mean += d;
  mean /= n;
  double var = 0.0;
  for (const double d : diffs) var += (d - mean) * (d - mean);
  const double se = std::sqrt(var / (n - 1.0) / n);
  // z-score of a shortfall; positive means the bound sits below the dual.
  r.statistic = se > 0.0 ? -mean / se : (mean < 0.0 ? HUGE_VAL : 0.0);
  r.passed = r.statistic <= r.threshold;
  r.detail = std::to_string(b.bound_replicates) + " replicates at " + std::to_string(side) + " x " +
             std::to_string(side) + " draws; " + detail::format_stat("mean gap ", mean) +
             detail::format_stat(", SE ", se);
  return r;
}

inline std::vector<CheckResult> run_all(const Options& opts) {
  const ModelSpec models[] = {ModelSpec::gauss_known_variance(2.0), ModelSpec::normal_gamma(),
                              ModelSpec::exp_gamma()};
  std::vector<CheckResult> out;
  out.push_back(check_digamma_recurrence());
  for (const auto& m : models) out.push_back(check_identity(m, opts));
  for (const auto& m : models) out.push_back(check_expected_kl(m, opts));
  out.push_back(check_gamma_oracle(opts));
  out.push_back(check_joint_oracle(opts));
  for (const auto& m : models) out.push_back(check_upper_bound(m, opts));
  return out;
}

}  // namespace drobas::verify

#endif
