// SPDX-License-Identifier: Apache-2.0

#ifndef DROBAS_REFERENCE_HPP
#define DROBAS_REFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

/// Brute-force reference computations for checking the solvers. They share no
/// code with dual_solver.hpp: plain long double sums over dense grids.
namespace drobas::reference {

/// gamma * slack + gamma ln mean exp(f / gamma); gamma = 0 gives max f.
inline long double entropic_dual(std::span<const double> f, long double gamma, long double slack) {
  long double fmax = -std::numeric_limits<long double>::infinity();
  for (const double v : f) fmax = std::max(fmax, static_cast<long double>(v));
  if (gamma == 0.0L) return fmax;
  long double acc = 0.0L;
  for (const double v : f) acc += std::exp((static_cast<long double>(v) - fmax) / gamma);
  return gamma * slack + fmax + gamma * std::log(acc / static_cast<long double>(f.size()));
}

struct GridMinimum {
  double gamma;
  double value;
};

/// Log-spaced grid of `points` multipliers over [lo, hi] plus gamma = 0.
/// Each further level re-grids the two cells around the best node.
inline GridMinimum gamma_grid_search(std::span<const double> f, double slack, int points = 10000,
                                     double lo = 1e-8, double hi = 1e8, int levels = 1) {
  GridMinimum best{0.0, static_cast<double>(entropic_dual(f, 0.0L, slack))};
  double tlo = std::log(lo);
  double thi = std::log(hi);
  for (int level = 0; level < levels; ++level) {
    const double step = (thi - tlo) / (points - 1);
    double best_t = tlo;
    double best_level = std::numeric_limits<double>::infinity();
    for (int i = 0; i < points; ++i) {
      const double t = tlo + i * step;
      const auto v = static_cast<double>(entropic_dual(f, std::exp(static_cast<long double>(t)), slack));
      if (v < best_level) {
        best_level = v;
        best_t = t;
      }
    }
    if (best_level < best.value) best = {std::exp(best_t), best_level};
    tlo = best_t - step;
    thi = best_t + step;
  }
  return best;
}

struct JointMinimum {
  double x;
  double gamma;
  double value;
};

/// Brute force over a points x points grid in (x, log gamma), zoomed around
/// the best node `levels` times. gamma = 0 is tried at every x.
inline JointMinimum joint_grid_search(const std::function<double(double, double)>& cost,
                                      std::span<const double> samples, double slack, double xlo,
                                      double xhi, int points = 400, int levels = 4,
                                      double glo = 1e-6, double ghi = 1e6) {
  JointMinimum best{xlo, 0.0, std::numeric_limits<double>::infinity()};
  std::vector<double> f(samples.size());
  double tlo = std::log(glo);
  double thi = std::log(ghi);
  for (int level = 0; level < levels; ++level) {
    const double xstep = (xhi - xlo) / (points - 1);
    const double tstep = (thi - tlo) / (points - 1);
    double best_t = 0.0;
    for (int i = 0; i < points; ++i) {
      const double x = xlo + i * xstep;
      for (std::size_t k = 0; k < samples.size(); ++k) f[k] = cost(x, samples[k]);
      const auto at_zero = static_cast<double>(entropic_dual(f, 0.0L, slack));
      if (at_zero < best.value) best = {x, 0.0, at_zero};
      for (int j = 0; j < points; ++j) {
        const double t = tlo + j * tstep;
        const auto v = static_cast<double>(entropic_dual(f, std::exp(static_cast<long double>(t)), slack));
        if (v < best.value) {
          best = {x, std::exp(t), v};
          best_t = t;
        }
      }
    }
    const double x0 = best.x;
    xlo = std::max(xlo, x0 - 2.0 * xstep);
    xhi = std::min(xhi, x0 + 2.0 * xstep);
    if (best.gamma > 0.0) {
      tlo = best_t - 2.0 * tstep;
      thi = best_t + 2.0 * tstep;
    }
  }
  return best;
}

}  // namespace drobas::reference

#endif
