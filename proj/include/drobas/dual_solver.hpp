// SPDX-License-Identifier: Apache-2.0

#ifndef DROBAS_DUAL_SOLVER_HPP
#define DROBAS_DUAL_SOLVER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drobas/conjugate_models.hpp"
#include "drobas/scalar_search.hpp"

/// Sample-average dual of the worst-case expected cost over the Bayesian
/// ambiguity set {Q : E_post[KL(Q || P_theta)] <= epsilon}:
///
///   inf_{gamma >= 0}  gamma (epsilon - G) + gamma ln( (1/N) sum_i exp(f_i / gamma) )
///
/// with f_i = f(x, xi_i) and xi_i drawn from the center distribution. The map
/// is convex in gamma and jointly convex in (x, gamma) when f is convex in x.
namespace drobas {

enum class Provenance { UserSet, EpsMin, EpsStar };

inline std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::UserSet:
      return "user";
    case Provenance::EpsMin:
      return "eps-min";
    case Provenance::EpsStar:
      return "eps-star";
  }
  return "unknown";
}

/// Tolerance epsilon together with the posterior gap G it is measured against.
class AmbiguitySpec {
 public:
  AmbiguitySpec(double epsilon, double gap, Provenance provenance = Provenance::UserSet)
      : epsilon_{epsilon}, gap_{gap}, provenance_{provenance} {
    if (!(gap >= 0.0) || !std::isfinite(gap)) {
      throw std::domain_error("ambiguity gap must be finite and >= 0");
    }
    if (!std::isfinite(epsilon) || !(epsilon >= gap)) {
      throw std::domain_error("epsilon = " + std::to_string(epsilon) +
                              " is below the minimum tolerance " + std::to_string(gap) +
                              ": the ambiguity set would be empty");
    }
  }

  /// epsilon = G(tau_n): the set collapses to the center distribution.
  static AmbiguitySpec at_minimum(double gap) { return {gap, gap, Provenance::EpsMin}; }

  double epsilon() const { return epsilon_; }
  double gap() const { return gap_; }
  double slack() const { return epsilon_ - gap_; }
  Provenance provenance() const { return provenance_; }

  /// The center distribution is strictly feasible, so strong duality holds.
  bool strong_duality() const { return epsilon_ > gap_; }

 private:
  double epsilon_;
  double gap_;
  Provenance provenance_;
};

/// f(x, xi) with a declared convexity in x.
struct CostOracle {
  std::function<double(double, double)> cost;
  bool convex_in_x = false;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SolverTolerances {
  double inner = 1e-9;  // log-gamma bracket width; value error is second order in it
  double outer = 1e-6;  // on the decision x
};

struct GammaMinimum {
  double gamma = 0.0;  // +inf when the infimum is only reached as gamma -> infinity
  double value = 0.0;
  int iterations = 0;
};

struct DualSolution {
  double x_star = 0.0;
  double gamma_star = 0.0;
  double value = 0.0;
  int iterations = 0;
  double inner_tolerance = 0.0;
  double outer_tolerance = 0.0;
  double wall_time = 0.0;  // seconds
};

namespace detail {

struct RowStats {
  double max = -std::numeric_limits<double>::infinity();
  double min = std::numeric_limits<double>::infinity();
  double mean = 0.0;
  std::size_t max_count = 0;
};

inline RowStats row_stats(std::span<const double> f) {
  if (f.empty()) {
    throw std::invalid_argument("cost sample is empty");
  }
  RowStats s;
  double sum = 0.0;
  for (const double v : f) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("cost values must be finite");
    }
    s.max = std::max(s.max, v);
    s.min = std::min(s.min, v);
    sum += v;
  }
  for (const double v : f) s.max_count += (v == s.max) ? 1 : 0;
  s.mean = sum / static_cast<double>(f.size());
  return s;
}

/// gamma ln mean exp(f / gamma) for gamma > 0, shifted by the row maximum.
inline double scaled_log_mean_exp(std::span<const double> f, double gamma, double fmax) {
  double sum_exp = 0.0;
  double sum_expm1 = 0.0;
  for (const double v : f) {
    const double u = (v - fmax) / gamma;
    sum_exp += std::exp(u);
    sum_expm1 += std::expm1(u);
  }
  const auto n = static_cast<double>(f.size());
  // log1p(mean(expm1)) keeps precision when every exponent is close to zero.
  const double log_mean = (sum_exp > 0.5 * n) ? std::log1p(sum_expm1 / n) : std::log(sum_exp / n);
  return fmax + gamma * log_mean;
}

/// KL(w || uniform) for the tilted weights w_i ~ exp(f_i / gamma); equals
/// minus the slope of gamma ln mean exp(f / gamma).
inline double tilt_divergence(std::span<const double> f, double gamma, double fmax) {
  double sum_exp = 0.0;
  double sum_weighted = 0.0;
  for (const double v : f) {
    const double u = (v - fmax) / gamma;
    const double e = std::exp(u);
    sum_exp += e;
    sum_weighted += e * u;
  }
  const auto n = static_cast<double>(f.size());
  return std::max(0.0, sum_weighted / sum_exp - std::log(sum_exp / n));
}

}  // namespace detail

/// gamma * slack + mean over rows of gamma ln mean exp(row / gamma), with the
/// gamma -> 0 limit (mean of row maxima) and gamma -> inf limit handled.
inline double shared_gamma_objective(std::span<const std::span<const double>> rows, double gamma,
                                     double slack) {
  if (rows.empty()) {
    throw std::invalid_argument("no cost rows");
  }
  if (!(gamma >= 0.0)) {
    throw std::domain_error("gamma must be >= 0");
  }
  const auto count = static_cast<double>(rows.size());
  double acc = 0.0;
  if (gamma == 0.0) {
    for (const auto row : rows) acc += detail::row_stats(row).max;
    return acc / count;
  }
  if (std::isinf(gamma)) {
    if (slack > 0.0) return std::numeric_limits<double>::infinity();
    for (const auto row : rows) acc += detail::row_stats(row).mean;
    return acc / count;
  }
  for (const auto row : rows) {
    acc += detail::scaled_log_mean_exp(row, gamma, detail::row_stats(row).max);
  }
  return gamma * slack + acc / count;
}

/// Minimizes shared_gamma_objective over gamma >= 0.
///
/// The slope is slack - mean_i KL(w_i || uniform), which decreases from
/// slack - mean_i ln(N_i / k_i) at gamma = 0 (k_i ties at the row maximum) to
/// slack as gamma -> inf. That fixes the two boundary cases exactly; otherwise
/// a log-gamma bracket is expanded until the slope changes sign and refined by
/// golden-section search.
inline GammaMinimum minimize_shared_gamma(std::span<const std::span<const double>> rows,
                                          double slack, double log_gamma_tolerance = 1e-9) {
  if (rows.empty()) {
    throw std::invalid_argument("no cost rows");
  }
  if (!(slack >= 0.0) || !std::isfinite(slack)) {
    throw std::domain_error("slack epsilon - G must be finite and >= 0");
  }
  std::vector<detail::RowStats> stats;
  stats.reserve(rows.size());
  double mean_of_max = 0.0;
  double mean_of_mean = 0.0;
  double slope_at_zero = 0.0;
  double spread = 0.0;
  for (const auto row : rows) {
    const auto s = detail::row_stats(row);
    stats.push_back(s);
    mean_of_max += s.max;
    mean_of_mean += s.mean;
    slope_at_zero +=
        std::log(static_cast<double>(row.size()) / static_cast<double>(s.max_count));
    spread = std::max(spread, s.max - s.min);
  }
  const auto count = static_cast<double>(rows.size());
  mean_of_max /= count;
  mean_of_mean /= count;
  slope_at_zero /= count;

  if (spread == 0.0) {
    return {0.0, mean_of_max, 0};
  }
  if (slack == 0.0) {
    return {std::numeric_limits<double>::infinity(), mean_of_mean, 0};
  }
  if (slack >= slope_at_zero) {
    return {0.0, mean_of_max, 0};
  }

  const auto divergence = [&](double gamma) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      acc += detail::tilt_divergence(rows[i], gamma, stats[i].max);
    }
    return acc / count;
  };
  const auto objective = [&](double log_gamma) {
    const double gamma = std::exp(log_gamma);
    double acc = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      acc += detail::scaled_log_mean_exp(rows[i], gamma, stats[i].max);
    }
    return gamma * slack + acc / count;
  };

  constexpr int max_expansions = 80;
  constexpr double step = 1e4;
  double lo = spread * 1e-8;
  double hi = spread * 1e8;
  int expansions = 0;
  while (divergence(lo) <= slack) {
    lo /= step;
    if (++expansions > max_expansions || lo == 0.0) {
      throw SolverError("minimize_gamma: could not bracket the minimizer from below");
    }
  }
  expansions = 0;
  while (divergence(hi) >= slack) {
    hi *= step;
    if (++expansions > max_expansions || std::isinf(hi)) {
      // Slack is below the resolution of the objective: the infimum is the
      // gamma -> inf limit.
      return {std::numeric_limits<double>::infinity(), mean_of_mean, expansions};
    }
  }
  const auto best = golden_section(objective, std::log(lo), std::log(hi), log_gamma_tolerance);
  return {std::exp(best.argmin), best.value, best.iterations};
}

/// Dual objective at a fixed multiplier; gamma = 0 returns the max-cost limit.
inline double dual_objective(std::span<const double> fvals, double gamma,
                             const AmbiguitySpec& amb) {
  const std::span<const double> rows[] = {fvals};
  return shared_gamma_objective(rows, gamma, amb.slack());
}

inline GammaMinimum minimize_gamma(std::span<const double> fvals, const AmbiguitySpec& amb,
                                   const SolverTolerances& tol = {}) {
  const std::span<const double> rows[] = {fvals};
  return minimize_shared_gamma(rows, amb.slack(), tol.inner);
}

/// Upper bound for general (non-conjugate) models: one shared multiplier,
/// averaged over posterior draws theta_j, each with its own xi-samples.
inline double general_upper_bound(std::span<const std::span<const double>> per_theta_costs,
                                  double gamma, double epsilon) {
  if (!(epsilon >= 0.0)) {
    throw std::domain_error("epsilon must be >= 0");
  }
  return shared_gamma_objective(per_theta_costs, gamma, epsilon);
}

inline GammaMinimum minimize_general_upper_bound(
    std::span<const std::span<const double>> per_theta_costs, double epsilon) {
  return minimize_shared_gamma(per_theta_costs, epsilon);
}

namespace detail {

inline void check_problem(const CostOracle& oracle, std::span<const double> samples,
                          Interval bounds) {
  if (!oracle.cost) {
    throw std::invalid_argument("cost oracle is empty");
  }
  if (!oracle.convex_in_x) {
    throw std::invalid_argument("cost oracle is not declared convex in x; refusing to solve");
  }
  if (samples.empty()) {
    throw std::invalid_argument("no model samples");
  }
  if (!std::isfinite(bounds.lo) || !std::isfinite(bounds.hi) || !(bounds.lo <= bounds.hi)) {
    throw std::invalid_argument("decision bounds must be finite with lo <= hi");
  }
}

/// Outer golden-section over x for a convex value function, then the
/// smallest x whose value ties the minimum.
template <class ValueFn>
ScalarMinimum minimize_decision(ValueFn&& value_at, Interval bounds,
                                const SolverTolerances& tol) {
  auto best = golden_section(value_at, bounds.lo, bounds.hi, tol.outer);
  // Ties are flat stretches of a piecewise-linear value, equal up to rounding.
  const double slack = 1e-12 * (1.0 + std::abs(best.value));
  const double leftmost =
      leftmost_near_minimum(value_at, bounds.lo, best.argmin, best.value, slack, tol.outer);
  if (leftmost < best.argmin) {
    const double v = value_at(leftmost);
    if (v <= best.value + slack) {
      best.argmin = leftmost;
      best.value = std::min(best.value, v);
    }
  }
  return best;
}

}  // namespace detail

/// Jointly minimizes the sample-average dual over x in bounds and gamma >= 0.
inline DualSolution solve_dro_bas(const CostOracle& oracle, std::span<const double> samples,
                                  const AmbiguitySpec& amb, Interval x_bounds,
                                  const SolverTolerances& tol = {}) {
  detail::check_problem(oracle, samples, x_bounds);
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> fvals(samples.size());
  const auto value_at = [&](double x) {
    for (std::size_t i = 0; i < samples.size(); ++i) fvals[i] = oracle.cost(x, samples[i]);
    return minimize_gamma(fvals, amb, tol).value;
  };
  const auto outer = detail::minimize_decision(value_at, x_bounds, tol);
  for (std::size_t i = 0; i < samples.size(); ++i) fvals[i] = oracle.cost(outer.argmin, samples[i]);
  const auto inner = minimize_gamma(fvals, amb, tol);

  DualSolution sol;
  sol.x_star = outer.argmin;
  sol.gamma_star = inner.gamma;
  sol.value = inner.value;
  sol.iterations = outer.iterations;
  sol.inner_tolerance = tol.inner;
  sol.outer_tolerance = tol.outer;
  sol.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

}  // namespace drobas

#endif
