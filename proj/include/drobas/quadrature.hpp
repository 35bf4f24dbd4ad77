// SPDX-License-Identifier: Apache-2.0

#ifndef DROBAS_QUADRATURE_HPP
#define DROBAS_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace drobas {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for integrals of the form int exp(-x^2) f(x) dx.
///
/// Roots of the orthonormal Hermite polynomial are found by Newton iteration
/// from the usual asymptotic starting guesses; the rule is symmetric so only
/// half of the roots are computed.
inline QuadratureRule gauss_hermite(int order) {
  if (order < 1) {
    throw std::invalid_argument("gauss_hermite: order must be >= 1");
  }
  constexpr int max_iterations = 100;
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  const auto n = static_cast<std::size_t>(order);
  QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
  const int half = (order + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * order + 1.0) - 1.85575 * std::pow(2.0 * order + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(order, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[static_cast<std::size_t>(i - 2)];
    }
    double derivative = 0.0;
    int iteration = 0;
    for (; iteration < max_iterations; ++iteration) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 0; j < order; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      derivative = std::sqrt(2.0 * order) * p2;
      const double step = p1 / derivative;
      z -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) {
        break;
      }
    }
    if (iteration == max_iterations) {
      throw std::runtime_error("gauss_hermite: Newton iteration did not converge");
    }
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = n - 1 - lo;
    rule.nodes[lo] = z;
    rule.nodes[hi] = -z;
    rule.weights[lo] = 2.0 / (derivative * derivative);
    rule.weights[hi] = rule.weights[lo];
  }
  return rule;
}

/// E[g(X)] for X ~ N(mean, variance) by Gauss-Hermite quadrature.
template <class Fn>
double gaussian_expectation(const QuadratureRule& rule, double mean, double variance, Fn&& g) {
  const double scale = std::sqrt(2.0 * variance);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    acc += rule.weights[i] * g(mean + scale * rule.nodes[i]);
  }
  return acc / std::sqrt(std::numbers::pi);
}

}  // namespace drobas

#endif
