// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace routelab {

struct Correlation {
  bool defined = false;  // false for constant input
  double r = 0.0;
  double p = 1.0;        // two-sided, t distribution with n - 2 degrees of freedom
  std::size_t n = 0;
  // Two-sided permutation p-value, reported for n <= kPermutationMaxN.
  std::optional<double> permutation_p;
};

inline constexpr std::size_t kPermutationMaxN = 10;
inline constexpr std::size_t kPermutationSamples = 100000;

Correlation pearson(std::span<const double> x, std::span<const double> y);
Correlation spearman(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the average of their positions.
std::vector<double> mid_ranks(std::span<const double> x);

/// Two-sided p-value of a correlation coefficient under the t approximation.
double correlation_p_value(double r, std::size_t n);

/// Exact over all n! orderings when n! <= kPermutationSamples, otherwise
/// kPermutationSamples seeded shuffles.
double permutation_p_value(std::span<const double> x, std::span<const double> y, std::uint64_t seed = 0);

/// Trailing mean over min(window, available) points.
std::vector<double> moving_average(std::span<const double> series, std::size_t window);

struct QuadraticFit {
  double a = 0.0;  // y = a x^2 + b x + c
  double b = 0.0;
  double c = 0.0;
  double evaluate(double x) const { return (a * x + b) * x + c; }
};

/// Least-squares quadratic; needs at least 3 distinct x values.
QuadraticFit fit_quadratic(std::span<const double> x, std::span<const double> y);

/// Least-squares slope of y on x.
double linear_slope(std::span<const double> x, std::span<const double> y);

}  // namespace routelab
