// SPDX-License-Identifier: Apache-2.0

#ifndef DROBAS_NEWSVENDOR_HPP
#define DROBAS_NEWSVENDOR_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drobas/dual_solver.hpp"
#include "drobas/random.hpp"

namespace drobas {

/// h max(0, x - xi) + b max(0, xi - x).
inline double newsvendor_cost(double x, double xi, double h, double b) {
  return h * std::max(0.0, x - xi) + b * std::max(0.0, xi - x);
}

inline CostOracle newsvendor_oracle(double h, double b) {
  if (!(h >= 0.0) || !(b >= 0.0) || !std::isfinite(h) || !std::isfinite(b)) {
    throw std::invalid_argument("holding and backorder costs must be finite and >= 0");
  }
  return CostOracle{[h, b](double x, double xi) { return newsvendor_cost(x, xi, h, b); }, true};
}

enum class DgpKind { Gaussian, TruncatedNormal };

inline std::string_view to_string(DgpKind kind) {
  return kind == DgpKind::Gaussian ? "gaussian" : "truncated-normal";
}

inline DgpKind parse_dgp_kind(std::string_view name) {
  if (name == "gaussian") return DgpKind::Gaussian;
  if (name == "truncated-normal") return DgpKind::TruncatedNormal;
  throw std::invalid_argument("unknown DGP '" + std::string(name) +
                              "' (expected gaussian or truncated-normal)");
}

/// True demand distribution.
///
/// For TruncatedNormal, mu_star and sigma2_star parametrize the normal before
/// truncation to `truncation` (default [0, inf)); see truncated_normal_moments
/// for the resulting mean and variance.
struct DgpSpec {
  DgpKind kind = DgpKind::Gaussian;
  double mu_star = 25.0;
  double sigma2_star = 100.0;
  std::optional<Interval> truncation;

  static DgpSpec gaussian(double mu, double sigma2) { return {DgpKind::Gaussian, mu, sigma2, {}}; }

  static DgpSpec truncated_normal(double mu, double sigma2,
                                  Interval support = {0.0, std::numeric_limits<double>::infinity()}) {
    return {DgpKind::TruncatedNormal, mu, sigma2, support};
  }

  void validate() const {
    if (!std::isfinite(mu_star)) throw std::invalid_argument("DGP mean must be finite");
    if (!(sigma2_star > 0.0) || !std::isfinite(sigma2_star)) {
      throw std::invalid_argument("DGP variance must be finite and > 0");
    }
    if (kind == DgpKind::TruncatedNormal) {
      if (!truncation || !(truncation->lo < truncation->hi)) {
        throw std::invalid_argument("truncation interval must satisfy lo < hi");
      }
    }
  }
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of N(mu, sigma2) restricted to [lo, hi].
inline Moments truncated_normal_moments(double mu, double sigma2, Interval support) {
  const double sigma = std::sqrt(sigma2);
  const auto pdf = [](double z) {
    return std::isinf(z) ? 0.0 : std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  };
  const auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
  const double a = (support.lo - mu) / sigma;
  const double b = (support.hi - mu) / sigma;
  const double mass = cdf(b) - cdf(a);
  const double ta = std::isinf(a) ? 0.0 : a * pdf(a);
  const double tb = std::isinf(b) ? 0.0 : b * pdf(b);
  const double shift = (pdf(a) - pdf(b)) / mass;
  return {mu + sigma * shift, sigma2 * (1.0 + (ta - tb) / mass - shift * shift)};
}

/// Single draw from the DGP. Truncated draws use rejection from the
/// underlying normal.
inline double draw_demand(const DgpSpec& dgp, Rng& rng) {
  std::normal_distribution<double> normal{dgp.mu_star, std::sqrt(dgp.sigma2_star)};
  if (dgp.kind == DgpKind::Gaussian) return normal(rng);
  constexpr int max_rejections = 100'000;
  for (int attempt = 0; attempt < max_rejections; ++attempt) {
    const double x = normal(rng);
    if (x >= dgp.truncation->lo && x <= dgp.truncation->hi) return x;
  }
  throw std::runtime_error("truncated-normal rejection sampler exceeded " +
                           std::to_string(max_rejections) +
                           " attempts; the truncation interval has negligible mass");
}

struct Dataset {
  std::vector<double> train;
  std::vector<double> test;
};

/// Train and test sets for one replicate, from disjoint substreams of `seed`.
inline Dataset generate_data(const DgpSpec& dgp, std::size_t n, std::size_t m, std::uint64_t seed,
                             std::uint64_t replicate = 0) {
  dgp.validate();
  if (n < 1 || m < 1) {
    throw std::invalid_argument("train and test sizes must be >= 1");
  }
  Dataset data;
  auto train_rng = make_stream(seed, Stream::Train, {replicate});
  auto test_rng = make_stream(seed, Stream::Test, {replicate});
  data.train.reserve(n);
  data.test.reserve(m);
  for (std::size_t i = 0; i < n; ++i) data.train.push_back(draw_demand(dgp, train_rng));
  for (std::size_t i = 0; i < m; ++i) data.test.push_back(draw_demand(dgp, test_rng));
  return data;
}

/// Mean and variance (1/m normalization) of the cost under the empirical
/// test distribution.
inline Moments out_of_sample(const CostOracle& oracle, double x, std::span<const double> test) {
  if (test.empty()) throw std::invalid_argument("empty test set");
  const auto m = static_cast<double>(test.size());
  double mean = 0.0;
  for (const double xi : test) mean += oracle.cost(x, xi);
  mean /= m;
  double var = 0.0;
  for (const double xi : test) {
    const double d = oracle.cost(x, xi) - mean;
    var += d * d;
  }
  return {mean, var / m};
}

}  // namespace drobas

#endif
