// SPDX-License-Identifier: Apache-2.0

#ifndef DROBAS_DIGAMMA_HPP
#define DROBAS_DIGAMMA_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace drobas {

namespace detail {

// Positive root of psi, split so that (z - root) is exact to double rounding.
inline constexpr double digamma_root_hi = 1.4616321449683622;
inline constexpr double digamma_root_lo = 9.549995429965697e-17;

// Taylor coefficients psi^(k)(root) / k!, k = 1..13.
inline constexpr std::array<double, 13> digamma_root_taylor{
    0.9676722454476212,   -0.4427631689835921,   0.258499760955651,
    -0.16394270544240652, 0.10782405069126237,   -0.07219956125645471,
    0.04880428816414311,  -0.03316112647484736,  0.022597648232218104,
    -0.01542476590494896, 0.010538791616612175,  -0.007204534386356869,
    0.004926781395729853};

inline constexpr double digamma_root_radius = 0.1;

// Asymptotic expansion, valid for z >= 10:
//   psi(z) ~ ln z - 1/(2z) - sum_k B_2k / (2k z^2k)
inline double digamma_asymptotic(double z) {
  constexpr std::array<double, 7> c{1.0 / 12.0,      -1.0 / 120.0,  1.0 / 252.0,
                                    -1.0 / 240.0,    1.0 / 132.0,   -691.0 / 32760.0,
                                    1.0 / 12.0};
  const double inv2 = 1.0 / (z * z);
  double series = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    series = (series + *it) * inv2;
  }
  return std::log(z) - 0.5 / z - series;
}

}  // namespace detail

/// Digamma function psi(z) = d/dz ln Gamma(z) for real z > 0.
///
/// Upward recurrence psi(z) = psi(z + 1) - 1/z until z >= 10, then the
/// asymptotic series. Within 0.1 of the positive root a Taylor expansion about
/// the root is used so the result keeps full relative accuracy there.
inline double digamma(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw std::domain_error("digamma: argument must be finite and > 0, got " + std::to_string(z));
  }
  const double offset = (z - detail::digamma_root_hi) - detail::digamma_root_lo;
  if (std::abs(offset) < detail::digamma_root_radius) {
    double acc = 0.0;
    for (auto it = detail::digamma_root_taylor.rbegin(); it != detail::digamma_root_taylor.rend();
         ++it) {
      acc = (acc + *it) * offset;
    }
    return acc;
  }
  double shift = 0.0;
  while (z < 10.0) {
    shift += 1.0 / z;
    z += 1.0;
  }
  return detail::digamma_asymptotic(z) - shift;
}

/// ln z - psi(z), which is strictly positive for z > 0.
///
/// For z >= 10 the difference is summed directly from the asymptotic series,
/// avoiding the cancellation of two nearly equal logarithms for large z.
inline double log_minus_digamma(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw std::domain_error("log_minus_digamma: argument must be finite and > 0, got " +
                            std::to_string(z));
  }
  if (z < 10.0) {
    return std::log(z) - digamma(z);
  }
  constexpr std::array<double, 7> c{1.0 / 12.0,   -1.0 / 120.0, 1.0 / 252.0,     -1.0 / 240.0,
                                    1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0};
  const double inv2 = 1.0 / (z * z);
  double series = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    series = (series + *it) * inv2;
  }
  return 0.5 / z + series;
}

}  // namespace drobas

#endif
