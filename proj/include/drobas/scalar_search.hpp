// SPDX-License-Identifier: Apache-2.0

#ifndef DROBAS_SCALAR_SEARCH_HPP
#define DROBAS_SCALAR_SEARCH_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace drobas {

/// Raised when an iterative routine hits its iteration cap.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScalarMinimum {
  double argmin = 0.0;
  double value = 0.0;
  int iterations = 0;
};

/// Golden-section search for the minimum of a unimodal function on [lo, hi].
///
/// Stops once the bracket is narrower than `tolerance`. Returns the best point
/// evaluated, preferring the smaller argument on exact ties.
template <class Fn>
ScalarMinimum golden_section(Fn&& f, double lo, double hi, double tolerance,
                             int max_iterations = 500) {
  if (!(lo <= hi)) {
    throw std::invalid_argument("golden_section: empty interval");
  }
  constexpr double inv_phi = 0.6180339887498948482;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int iterations = 0;
  while (b - a > tolerance) {
    if (++iterations > max_iterations) {
      throw SolverError("golden_section: no convergence after " + std::to_string(max_iterations) +
                        " iterations");
    }
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  ScalarMinimum best{c, fc, iterations};
  if (fd < fc) best = {d, fd, iterations};
  // Bracket endpoints matter when the minimum sits on the boundary.
  for (const double edge : {lo, hi}) {
    if (std::abs(edge - best.argmin) <= 2.0 * tolerance) {
      const double fe = f(edge);
      if (fe < best.value || (fe == best.value && edge < best.argmin)) {
        best = {edge, fe, iterations};
      }
    }
  }
  return best;
}

/// Smallest x in [lo, x_best] whose value is within `slack` of f(x_best),
/// assuming f is convex so the sublevel set is an interval.
template <class Fn>
double leftmost_near_minimum(Fn&& f, double lo, double x_best, double f_best, double slack,
                             double tolerance) {
  if (f(lo) <= f_best + slack) return lo;
  double outside = lo;
  double inside = x_best;
  while (inside - outside > tolerance) {
    const double mid = 0.5 * (outside + inside);
    if (f(mid) <= f_best + slack) {
      inside = mid;
    } else {
      outside = mid;
    }
  }
  return inside;
}

}  // namespace drobas

#endif
