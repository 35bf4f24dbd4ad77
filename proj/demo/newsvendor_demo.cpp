// SPDX-License-Identifier: Apache-2.0
//
// One newsvendor instance end to end: draw 25 Gaussian demands, fit the
// normal-gamma posterior, then solve DRO-BAS and BDRO over a few tolerances
// and score each decision on held-out demand.

#include <cstdio>
#include <variant>
#include <vector>

#include "drobas/bdro.hpp"
#include "drobas/conjugate_models.hpp"
#include "drobas/dual_solver.hpp"
#include "drobas/newsvendor.hpp"

int main() {
  using namespace drobas;

  const auto model = ModelSpec::normal_gamma();
  const NormalGammaHyper prior{0.0, 1.0, 1.0, 1.0};
  const auto oracle = newsvendor_oracle(1.0, 2.0);  // h = 1, b = 2
  const Interval bounds{0.0, 200.0};

  const auto data = generate_data(DgpSpec::gaussian(25.0, 100.0), 25, 5000, 7);
  const auto post = update_posterior(model, prior, data.train);
  const double g = gap(model, post);
  const auto center = theta_bar(model, post);

  std::printf("posterior predictive center: mean %.4f, variance %.4f\n", std::get<GaussianParams>(center).mean,
              std::get<GaussianParams>(center).variance);
  std::printf("minimum tolerance: %.6f\n\n", g);

  auto rng = make_stream(7, Stream::Model, {1});
  const auto samples = sample_center(center, 900, rng);
  auto inst = make_bdro_instance(model, post, 30, 30, 0.0, bounds, rng);

  std::printf("%-8s %-7s %10s %10s %10s %10s\n", "method", "eps", "x*", "value", "oos mean", "oos var");
  for (const double eps : std::vector<double>{g, 0.1, 0.5, 1.0, 2.0}) {
    if (eps >= g) {
      const auto sol = solve_dro_bas(oracle, samples, AmbiguitySpec{eps, g}, bounds);
      const auto oos = out_of_sample(oracle, sol.x_star, data.test);
      std::printf("%-8s %-7.4f %10.4f %10.4f %10.4f %10.4f\n", "dro-bas", eps, sol.x_star, sol.value, oos.mean,
                  oos.variance);
    }
    inst.epsilon = eps;
    const auto sol = solve_bdro(inst, oracle);
    const auto oos = out_of_sample(oracle, sol.x_star, data.test);
    std::printf("%-8s %-7.4f %10.4f %10.4f %10.4f %10.4f\n", "bdro", eps, sol.x_star, sol.value, oos.mean,
                oos.variance);
  }
  return 0;
}
