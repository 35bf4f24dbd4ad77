// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <variant>
#include <vector>

#include "drobas/conjugate_models.hpp"
#include "support/oracles.hpp"

namespace {

using namespace drobas;

const NormalGammaHyper bench_prior{0.0, 1.0, 1.0, 1.0};

PosteriorState random_posterior(const ModelSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> u01{0.0, 1.0};
  std::uniform_int_distribution<int> size{0, 30};
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  std::vector<double> data(static_cast<std::size_t>(size(rng)));
  switch (spec.family()) {
    case Family::GaussKnownVar: {
      std::normal_distribution<double> gen{uniform(-5, 5), std::sqrt(spec.known_variance())};
      for (auto& x : data) x = gen(rng);
      return update_posterior(spec, GaussianHyper{uniform(-5, 5), uniform(0.5, 5)}, data);
    }
    case Family::NormalGamma: {
      std::normal_distribution<double> gen{uniform(-5, 5), uniform(0.5, 3)};
      for (auto& x : data) x = gen(rng);
      return update_posterior(
          spec, NormalGammaHyper{uniform(-5, 5), uniform(0.5, 3), uniform(0.5, 5), uniform(0.5, 5)},
          data);
    }
    case Family::ExpGamma: {
      std::exponential_distribution<double> gen{uniform(0.2, 3)};
      for (auto& x : data) x = gen(rng);
      return update_posterior(spec, GammaHyper{uniform(0.5, 5), uniform(0.5, 5)}, data);
    }
  }
  throw std::logic_error("unreachable");
}

TEST(UpdatePosterior, EmptyDataReturnsPriorExactly) {
  const auto spec = ModelSpec::gauss_known_variance(1.0);
  const auto post = update_posterior(spec, GaussianHyper{0.0, 1.0}, {});
  EXPECT_EQ(post.n, 0u);
  EXPECT_EQ(std::get<GaussianHyper>(post.hyper).mean, 0.0);
  EXPECT_EQ(std::get<GaussianHyper>(post.hyper).variance, 1.0);

  const NormalGammaHyper odd{0.1, 0.3, 0.7, 1.9};
  const auto ng = update_posterior(ModelSpec::normal_gamma(), odd, {});
  const auto& h = std::get<NormalGammaHyper>(ng.hyper);
  EXPECT_EQ(h.mu, odd.mu);
  EXPECT_EQ(h.kappa, odd.kappa);
  EXPECT_EQ(h.alpha, odd.alpha);
  EXPECT_EQ(h.beta, odd.beta);
}

TEST(UpdatePosterior, NormalGammaCountsFromBenchmarkPrior) {
  std::vector<double> data(20);
  Rng rng{7};
  std::normal_distribution<double> gen{25.0, 10.0};
  for (auto& x : data) x = gen(rng);
  const auto post = update_posterior(ModelSpec::normal_gamma(), bench_prior, data);
  const auto& h = std::get<NormalGammaHyper>(post.hyper);
  EXPECT_EQ(post.n, 20u);
  EXPECT_DOUBLE_EQ(h.kappa, 21.0);
  EXPECT_DOUBLE_EQ(h.alpha, 11.0);
}

TEST(UpdatePosterior, NormalGammaHandArithmetic) {
  // Data {1, 3}: mean 2, scatter 2. Prior (0, 1, 1, 1).
  const std::vector<double> data{1.0, 3.0};
  const auto h = std::get<NormalGammaHyper>(
      update_posterior(ModelSpec::normal_gamma(), bench_prior, data).hyper);
  EXPECT_DOUBLE_EQ(h.kappa, 3.0);
  EXPECT_DOUBLE_EQ(h.mu, 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(h.alpha, 2.0);
  // beta = 1 + 2/2 + 1*2*(2-0)^2 / (2*3) = 2 + 4/3
  EXPECT_DOUBLE_EQ(h.beta, 2.0 + 4.0 / 3.0);
}

TEST(UpdatePosterior, ExpGammaHandArithmetic) {
  const std::vector<double> data{2.0, 3.0};
  const auto post = update_posterior(ModelSpec::exp_gamma(), GammaHyper{1.0, 1.0}, data);
  EXPECT_DOUBLE_EQ(std::get<GammaHyper>(post.hyper).alpha, 3.0);
  EXPECT_DOUBLE_EQ(std::get<GammaHyper>(post.hyper).beta, 6.0);
}

TEST(UpdatePosterior, GaussKnownVarPrecisionAdds) {
  // prior N(0, 1), sigma^2 = 4, data {2, 2}: 1/s_n^2 = 1 + 2/4, mu_n = s_n^2 * (4/4)
  const std::vector<double> data{2.0, 2.0};
  const auto h = std::get<GaussianHyper>(
      update_posterior(ModelSpec::gauss_known_variance(4.0), GaussianHyper{0.0, 1.0}, data).hyper);
  EXPECT_NEAR(h.variance, 1.0 / 1.5, 1e-15);
  EXPECT_NEAR(h.mean, (1.0 / 1.5) * 1.0, 1e-15);
}

TEST(UpdatePosterior, Errors) {
  const std::vector<double> negative{1.0, -0.5};
  EXPECT_THROW(update_posterior(ModelSpec::exp_gamma(), GammaHyper{}, negative), std::domain_error);
  const std::vector<double> zero{0.0};
  EXPECT_THROW(update_posterior(ModelSpec::exp_gamma(), GammaHyper{}, zero), std::domain_error);
  const std::vector<double> nonfinite{1.0, std::nan("")};
  EXPECT_THROW(update_posterior(ModelSpec::normal_gamma(), bench_prior, nonfinite),
               std::invalid_argument);
  EXPECT_THROW(update_posterior(ModelSpec::normal_gamma(), GammaHyper{}, {}), std::invalid_argument);
  EXPECT_THROW(update_posterior(ModelSpec::normal_gamma(), NormalGammaHyper{0, -1, 1, 1}, {}),
               std::domain_error);
  EXPECT_THROW(ModelSpec::gauss_known_variance(0.0), std::domain_error);
}

TEST(ThetaBar, TableValues) {
  const auto ng = theta_bar(ModelSpec::normal_gamma(),
                            PosteriorState{NormalGammaHyper{5.0, 21.0, 11.0, 22.0}, 20});
  EXPECT_DOUBLE_EQ(std::get<GaussianParams>(ng).mean, 5.0);
  EXPECT_DOUBLE_EQ(std::get<GaussianParams>(ng).variance, 2.0);

  const auto eg = theta_bar(ModelSpec::exp_gamma(), PosteriorState{GammaHyper{3.0, 6.0}, 2});
  EXPECT_DOUBLE_EQ(std::get<ExponentialParams>(eg).rate, 0.5);

  const auto gk = theta_bar(ModelSpec::gauss_known_variance(4.0), PosteriorState{GaussianHyper{1.0, 0.3}, 3});
  EXPECT_DOUBLE_EQ(std::get<GaussianParams>(gk).mean, 1.0);
  EXPECT_DOUBLE_EQ(std::get<GaussianParams>(gk).variance, 4.0);
}

TEST(Gap, TableValues) {
  const PosteriorState ng{NormalGammaHyper{0.0, 21.0, 11.0, 1.0}, 20};
  EXPECT_NEAR(gap(ModelSpec::normal_gamma(), ng), 0.047, 5e-4);
  EXPECT_NEAR(gap(ModelSpec::normal_gamma(), ng), 0.04688086567534853, 1e-15);
  EXPECT_EQ(epsilon_min(ModelSpec::normal_gamma(), ng), gap(ModelSpec::normal_gamma(), ng));

  const auto gk = ModelSpec::gauss_known_variance(2.5);
  EXPECT_DOUBLE_EQ(gap(gk, PosteriorState{GaussianHyper{0.0, 2.5}, 0}), 0.5);

  EXPECT_NEAR(gap(ModelSpec::exp_gamma(), PosteriorState{GammaHyper{1.0, 3.0}, 0}),
              oracle::euler_gamma, 1e-9);
}

TEST(Gap, NonNegativeOverRandomPosteriors) {
  Rng rng{11};
  for (const auto& spec : {ModelSpec::gauss_known_variance(1.7), ModelSpec::normal_gamma(),
                           ModelSpec::exp_gamma()}) {
    for (int i = 0; i < 500; ++i) {
      EXPECT_GE(gap(spec, random_posterior(spec, rng)), 0.0);
    }
  }
}

TEST(EpsilonMin, DecreasesWithSampleSize) {
  for (const auto& spec : {ModelSpec::gauss_known_variance(3.0), ModelSpec::normal_gamma(),
                           ModelSpec::exp_gamma()}) {
    double previous = std::numeric_limits<double>::infinity();
    for (const std::size_t n : {10u, 100u, 1000u}) {
      // Unit observations keep the data statistics fixed as n grows.
      const std::vector<double> data(n, 1.0);
      Hyper prior = GaussianHyper{0.0, 1.0};
      if (spec.family() == Family::NormalGamma) prior = bench_prior;
      if (spec.family() == Family::ExpGamma) prior = GammaHyper{1.0, 1.0};
      const double value = epsilon_min(spec, update_posterior(spec, prior, data));
      EXPECT_LT(value, previous);
      previous = value;
    }
  }
}

TEST(EpsilonMin, ExpGammaVanishesLikeHalfOverAlpha) {
  for (const double alpha : {1e2, 1e3, 1e4, 1e5}) {
    const double value = epsilon_min(ModelSpec::exp_gamma(), PosteriorState{GammaHyper{alpha, 1.0}, 0});
    EXPECT_NEAR(value, 0.5 / alpha, 1.0 / (alpha * alpha));
  }
}

TEST(KlDivergence, ClosedFormsAgainstQuadrature) {
  EXPECT_EQ(kl_divergence(GaussianParams{0, 1}, GaussianParams{0, 1}), 0.0);
  EXPECT_NEAR(kl_divergence(ExponentialParams{1.0}, ExponentialParams{2.0}), 0.30685281944005466,
              1e-10);
  EXPECT_NEAR(kl_divergence(ExponentialParams{1.0}, ExponentialParams{2.0}),
              oracle::kl_exponential_quadrature(1.0, 2.0), 1e-8);
  EXPECT_NEAR(kl_divergence(GaussianParams{2, 1}, GaussianParams{0, 1}), 2.0, 1e-15);
  EXPECT_NEAR(kl_divergence(GaussianParams{2, 1}, GaussianParams{0, 1}),
              oracle::kl_normal_quadrature(2, 1, 0, 1), 1e-8);
  EXPECT_NEAR(kl_divergence(GaussianParams{-1.5, 0.4}, GaussianParams{0.7, 2.3}),
              oracle::kl_normal_quadrature(-1.5, 0.4, 0.7, 2.3), 1e-8);
  EXPECT_THROW(kl_divergence(GaussianParams{0, 1}, ExponentialParams{1}), std::invalid_argument);
  EXPECT_THROW(kl_divergence(GaussianParams{0, -1}, GaussianParams{0, 1}), std::domain_error);
}

TEST(LogLikelihood, PointwiseDensities) {
  EXPECT_NEAR(log_likelihood(GaussianParams{1.0, 4.0}, 2.0), std::log(oracle::normal_pdf(2.0, 1.0, 4.0)),
              1e-14);
  EXPECT_NEAR(log_likelihood(ExponentialParams{2.0}, 0.5), std::log(2.0) - 1.0, 1e-15);
  EXPECT_EQ(log_likelihood(ExponentialParams{2.0}, -0.5), -std::numeric_limits<double>::infinity());
}

TEST(EpsilonStar, GaussKnownVarFormulas) {
  const auto spec = ModelSpec::gauss_known_variance(1.0);
  const PosteriorState post{GaussianHyper{3.0, 1.0}, 5};
  EXPECT_DOUBLE_EQ(epsilon_star(spec, post, GaussianParams{3.0, 1.0}), 0.5);
  // ((mu* - mu_n)^2 + s_n^2) / (2 sigma^2) with mu* - mu_n = 2
  EXPECT_DOUBLE_EQ(epsilon_star(spec, post, GaussianParams{5.0, 1.0}), 2.5);
  EXPECT_THROW(epsilon_star(spec, post, GaussianParams{5.0, 2.0}), std::domain_error);
  EXPECT_THROW(epsilon_star(spec, post, ExponentialParams{1.0}), std::domain_error);
}

TEST(EpsilonStar, ExpGammaMatchesExpandedDisplay) {
  const PosteriorState post{GammaHyper{4.0, 3.0}, 3};
  const double truth = 0.8;
  const double a = 4.0;
  const double b = 3.0;
  const double expected = std::log(truth) - std::log(a / b) + a / (b * truth) - 1.0 +
                          std::log(a) - digamma(a);
  EXPECT_NEAR(epsilon_star(ModelSpec::exp_gamma(), post, ExponentialParams{truth}), expected, 1e-14);
}

TEST(EpsilonStar, AtLeastEpsilonMin) {
  Rng rng{5};
  std::normal_distribution<double> jitter;
  for (const auto& spec : {ModelSpec::gauss_known_variance(2.0), ModelSpec::normal_gamma(),
                           ModelSpec::exp_gamma()}) {
    for (int i = 0; i < 200; ++i) {
      const auto post = random_posterior(spec, rng);
      Params truth = ExponentialParams{std::exp(jitter(rng))};
      if (spec.family() == Family::GaussKnownVar) truth = GaussianParams{3 * jitter(rng), 2.0};
      if (spec.family() == Family::NormalGamma) truth = GaussianParams{3 * jitter(rng), std::exp(jitter(rng))};
      EXPECT_GE(epsilon_star(spec, post, truth), epsilon_min(spec, post));
    }
  }
}

TEST(EpsilonStarPlugin, HandCases) {
  const auto spec = ModelSpec::normal_gamma();
  const std::vector<double> two{24.0, 26.0};
  const auto post = update_posterior(spec, bench_prior, two);
  const auto truth = std::get<GaussianParams>(plugin_truth(spec, two));
  EXPECT_DOUBLE_EQ(truth.mean, 25.0);
  EXPECT_DOUBLE_EQ(truth.variance, 2.0);
  const double value = epsilon_star_plugin(spec, post, two);
  EXPECT_TRUE(std::isfinite(value));
  EXPECT_GT(value, 0.0);

  const std::vector<double> ones{1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(std::get<ExponentialParams>(plugin_truth(ModelSpec::exp_gamma(), ones)).rate, 1.0);

  EXPECT_THROW(epsilon_star_plugin(spec, post, ones), std::domain_error);  // zero variance
  EXPECT_THROW(plugin_truth(spec, std::vector<double>{}), std::invalid_argument);
}

TEST(EpsilonStarPlugin, ApproachesGapForDataFromTheCenter) {
  const auto spec = ModelSpec::normal_gamma();
  const PosteriorState post{NormalGammaHyper{25.0, 21.0, 11.0, 1100.0}, 20};
  Rng rng{99};
  const auto data = sample_center(theta_bar(spec, post), 100000, rng);
  // KL(plug-in || center) shrinks like 1/n; 3e-4 is roughly 10x its mean at n = 1e5.
  EXPECT_NEAR(epsilon_star_plugin(spec, post, data), gap(spec, post), 3e-4);
}

TEST(SampleCenter, MomentsAndDeterminism) {
  Rng rng{2024};
  const auto normal = sample_center(GaussianParams{25.0, 100.0}, 1'000'000, rng);
  double mean = 0.0;
  for (const double x : normal) mean += x;
  mean /= static_cast<double>(normal.size());
  double var = 0.0;
  for (const double x : normal) var += (x - mean) * (x - mean);
  var /= static_cast<double>(normal.size() - 1);
  EXPECT_NEAR(mean, 25.0, 0.3);
  EXPECT_NEAR(var, 100.0, 1.5);

  const auto expo = sample_center(ExponentialParams{2.0}, 1'000'000, rng);
  double emean = 0.0;
  for (const double x : expo) emean += x;
  EXPECT_NEAR(emean / 1e6, 0.5, 0.002);

  Rng a{17};
  Rng b{17};
  EXPECT_EQ(sample_center(GaussianParams{0, 1}, 1, a), sample_center(GaussianParams{0, 1}, 1, b));
}

TEST(SamplePosteriorParams, NormalGammaMoments) {
  const auto spec = ModelSpec::normal_gamma();
  const NormalGammaHyper h{2.0, 3.0, 4.0, 5.0};
  const PosteriorState post{h, 0};
  Rng rng{31337};
  PosteriorSampler sampler{spec, post};
  const std::size_t count = 1'000'000;
  // Running sums for lambda, lambda*mu, lambda*mu^2 and their squares.
  double s[3] = {0, 0, 0};
  double q[3] = {0, 0, 0};
  for (std::size_t i = 0; i < count; ++i) {
    const auto g = std::get<GaussianParams>(sampler(rng));
    const double lambda = 1.0 / g.variance;
    const double v[3] = {lambda, lambda * g.mean, lambda * g.mean * g.mean};
    for (int k = 0; k < 3; ++k) {
      s[k] += v[k];
      q[k] += v[k] * v[k];
    }
  }
  const double expected[3] = {h.alpha / h.beta, h.mu * h.alpha / h.beta,
                              1.0 / h.kappa + h.mu * h.mu * h.alpha / h.beta};
  for (int k = 0; k < 3; ++k) {
    const double mean = s[k] / count;
    const double se = std::sqrt((q[k] / count - mean * mean) / count);
    EXPECT_NEAR(mean, expected[k], 3.0 * se) << "moment " << k;
  }
}

TEST(SamplePosteriorParams, CountAndFamilyShape) {
  Rng rng{1};
  const auto draws = sample_posterior_params(ModelSpec::exp_gamma(), PosteriorState{GammaHyper{2, 2}, 0}, 7, rng);
  ASSERT_EQ(draws.size(), 7u);
  for (const auto& d : draws) EXPECT_TRUE(std::holds_alternative<ExponentialParams>(d));
}

TEST(IdentityResidual, GaussKnownVarQuadratureIsExact) {
  const auto spec = ModelSpec::gauss_known_variance(2.0);
  Rng rng{3};
  for (int i = 0; i < 50; ++i) {
    const auto post = random_posterior(spec, rng);
    for (const double xi : {-7.0, -1.0, 0.0, 2.5, 9.0}) {
      const auto r = identity_residual(spec, post, xi, IdentityBudget{64, 0}, rng);
      EXPECT_LE(std::abs(r.value), 1e-8);
      EXPECT_EQ(r.std_error, 0.0);
    }
  }
}

TEST(IdentityResidual, MonteCarloFamiliesWithinFourStandardErrors) {
  Rng rng{8};
  const IdentityBudget budget{64, 200'000};
  for (const auto& spec : {ModelSpec::normal_gamma(), ModelSpec::exp_gamma()}) {
    for (int i = 0; i < 5; ++i) {
      const auto post = random_posterior(spec, rng);
      const double xi = spec.family() == Family::ExpGamma ? 1.0 : 0.5 * i - 1.0;
      const auto r = identity_residual(spec, post, xi, budget, rng);
      EXPECT_GT(r.std_error, 0.0);
      EXPECT_LE(std::abs(r.value), 4.0 * r.std_error) << to_string(spec.family()) << " #" << i;
    }
  }
}

TEST(IdentityResidual, FlippedExpGammaGapIsDetected) {
  // The residual with G replaced by -G is shifted by -2G, far outside the MC noise.
  const auto spec = ModelSpec::exp_gamma();
  const PosteriorState post{GammaHyper{3.0, 2.0}, 0};
  Rng rng{4};
  const auto r = identity_residual(spec, post, 1.0, IdentityBudget{64, 200'000}, rng);
  const double flipped = r.value - 2.0 * gap(spec, post);
  EXPECT_GT(std::abs(flipped), 4.0 * r.std_error);
}

TEST(ExpectedKl, DecomposesIntoCenterKlPlusGap) {
  Rng rng{21};
  const auto spec = ModelSpec::normal_gamma();
  const auto post = random_posterior(spec, rng);
  const auto center = theta_bar(spec, post);
  // Q at the center: closed-form side is exactly G.
  const auto at_center = expected_kl_monte_carlo(spec, post, center, 200'000, rng);
  EXPECT_NEAR(at_center.value, gap(spec, post), 4.0 * at_center.std_error);
  const Params q = GaussianParams{1.0, 2.0};
  const auto est = expected_kl_monte_carlo(spec, post, q, 200'000, rng);
  EXPECT_NEAR(est.value, kl_divergence(q, center) + gap(spec, post), 4.0 * est.std_error);
}

}  // namespace
