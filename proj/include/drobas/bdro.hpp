// SPDX-License-Identifier: Apache-2.0

#ifndef DROBAS_BDRO_HPP
#define DROBAS_BDRO_HPP

#include <chrono>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "drobas/conjugate_models.hpp"
#include "drobas/dual_solver.hpp"

/// Bayesian DRO baseline: the posterior average of per-draw worst cases over
/// KL balls {Q : KL(Q || P_theta_i) <= epsilon}. Each draw has its own
/// multiplier, so at fixed x the inner problem separates into N_theta scalar
/// convex minimizations.
namespace drobas {

/// N_theta x N_xi draws xi_ij ~ p(. | theta_i), stored row-major.
struct BdroInstance {
  std::vector<Params> theta_samples;
  std::size_t n_xi = 0;
  std::vector<double> xi_samples;
  double epsilon = 0.0;
  Interval x_bounds;

  std::size_t n_theta() const { return theta_samples.size(); }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>{xi_samples}.subspan(i * n_xi, n_xi);
  }

  void validate() const {
    if (theta_samples.empty() || n_xi == 0) {
      throw std::invalid_argument("BDRO instance needs N_theta >= 1 and N_xi >= 1");
    }
    if (xi_samples.size() != theta_samples.size() * n_xi) {
      throw std::invalid_argument("BDRO sample matrix does not match N_theta x N_xi");
    }
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
      throw std::domain_error("BDRO epsilon must be finite and >= 0");
    }
  }
};

struct BdroSolution {
  double x_star = 0.0;
  std::vector<double> gammas;
  double value = 0.0;
  int iterations = 0;
  double inner_tolerance = 0.0;
  double outer_tolerance = 0.0;
  double wall_time = 0.0;
};

/// Draws theta_i from the posterior, then N_xi likelihood samples per draw.
inline BdroInstance make_bdro_instance(const ModelSpec& spec, const PosteriorState& post,
                                       std::size_t n_theta, std::size_t n_xi, double epsilon,
                                       Interval x_bounds, Rng& rng) {
  BdroInstance inst;
  inst.theta_samples = sample_posterior_params(spec, post, n_theta, rng);
  inst.n_xi = n_xi;
  inst.epsilon = epsilon;
  inst.x_bounds = x_bounds;
  inst.xi_samples.reserve(n_theta * n_xi);
  for (const auto& theta : inst.theta_samples) {
    for (std::size_t j = 0; j < n_xi; ++j) inst.xi_samples.push_back(draw(theta, rng));
  }
  inst.validate();
  return inst;
}

namespace detail {

inline void fill_costs(const BdroInstance& inst, const CostOracle& oracle, double x,
                       std::vector<double>& costs) {
  costs.resize(inst.xi_samples.size());
  for (std::size_t k = 0; k < costs.size(); ++k) costs[k] = oracle.cost(x, inst.xi_samples[k]);
}

inline std::span<const double> cost_row(const std::vector<double>& costs, std::size_t i,
                                        std::size_t n_xi) {
  return std::span<const double>{costs}.subspan(i * n_xi, n_xi);
}

}  // namespace detail

/// (1/N_theta) sum_i [gamma_i epsilon + gamma_i ln mean_j exp(f(x, xi_ij) / gamma_i)].
inline double bdro_objective(const BdroInstance& inst, const CostOracle& oracle, double x,
                             std::span<const double> gammas) {
  inst.validate();
  if (gammas.size() != inst.n_theta()) {
    throw std::invalid_argument("expected one multiplier per posterior draw");
  }
  std::vector<double> costs;
  detail::fill_costs(inst, oracle, x, costs);
  double acc = 0.0;
  for (std::size_t i = 0; i < inst.n_theta(); ++i) {
    const std::span<const double> rows[] = {detail::cost_row(costs, i, inst.n_xi)};
    acc += shared_gamma_objective(rows, gammas[i], inst.epsilon);
  }
  return acc / static_cast<double>(inst.n_theta());
}

/// Per-row optimal multipliers and the resulting objective at a fixed x.
inline std::pair<std::vector<double>, double> bdro_minimize_gammas(const BdroInstance& inst,
                                                                   const CostOracle& oracle,
                                                                   double x,
                                                                   const SolverTolerances& tol = {}) {
  inst.validate();
  std::vector<double> costs;
  detail::fill_costs(inst, oracle, x, costs);
  const AmbiguitySpec ball{inst.epsilon, 0.0};
  std::vector<double> gammas(inst.n_theta());
  double acc = 0.0;
  for (std::size_t i = 0; i < inst.n_theta(); ++i) {
    const auto inner = minimize_gamma(detail::cost_row(costs, i, inst.n_xi), ball, tol);
    gammas[i] = inner.gamma;
    acc += inner.value;
  }
  return {std::move(gammas), acc / static_cast<double>(inst.n_theta())};
}

inline BdroSolution solve_bdro(const BdroInstance& inst, const CostOracle& oracle,
                               const SolverTolerances& tol = {}) {
  inst.validate();
  detail::check_problem(oracle, inst.xi_samples, inst.x_bounds);
  const auto start = std::chrono::steady_clock::now();
  const auto value_at = [&](double x) { return bdro_minimize_gammas(inst, oracle, x, tol).second; };
  const auto outer = detail::minimize_decision(value_at, inst.x_bounds, tol);
  auto [gammas, value] = bdro_minimize_gammas(inst, oracle, outer.argmin, tol);

  BdroSolution sol;
  sol.x_star = outer.argmin;
  sol.gammas = std::move(gammas);
  sol.value = value;
  sol.iterations = outer.iterations;
  sol.inner_tolerance = tol.inner;
  sol.outer_tolerance = tol.outer;
  sol.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

}  // namespace drobas

#endif
