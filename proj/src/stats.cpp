// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "routelab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "routelab/errors.hpp"
#include "routelab/linalg.hpp"

namespace routelab {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, const char* who) {
  require(x.size() == y.size(), std::string(who) + ": length mismatch");
  require(x.size() >= 3, std::string(who) + ": need at least 3 points");
  for (std::size_t i = 0; i < x.size(); ++i)
    require(std::isfinite(x[i]) && std::isfinite(y[i]), std::string(who) + ": non-finite input");
}

// Plain product-moment coefficient; nullopt when either input is constant.
std::optional<double> raw_pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Correlation finish(std::optional<double> r, std::span<const double> x, std::span<const double> y) {
  Correlation c;
  c.n = x.size();
  if (!r) return c;
  c.defined = true;
  c.r = *r;
  c.p = correlation_p_value(c.r, c.n);
  if (c.n <= kPermutationMaxN) c.permutation_p = permutation_p_value(x, y);
  return c;
}

}  // namespace

double correlation_p_value(double r, std::size_t n) {
  require(n >= 3, "correlation_p_value: need n >= 3");
  const double ar = std::min(1.0, std::abs(r));
  if (ar >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = ar * std::sqrt(df / (1.0 - ar * ar));
  boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
}

std::vector<double> mid_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "pearson");
  return finish(raw_pearson(x, y), x, y);
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "spearman");
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  return finish(raw_pearson(rx, ry), rx, ry);
}

double permutation_p_value(std::span<const double> x, std::span<const double> y, std::uint64_t seed) {
  check_pair(x, y, "permutation_p_value");
  const auto observed = raw_pearson(x, y);
  if (!observed) return 1.0;
  const double threshold = std::abs(*observed) - 1e-12;
  std::vector<double> perm(y.begin(), y.end());
  double factorial = 1.0;
  for (std::size_t i = 2; i <= perm.size(); ++i) factorial *= static_cast<double>(i);

  std::size_t extreme = 0, total = 0;
  if (factorial <= static_cast<double>(kPermutationSamples)) {
    std::vector<std::size_t> idx(perm.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    do {
      for (std::size_t i = 0; i < idx.size(); ++i) perm[i] = y[idx[i]];
      if (std::abs(*raw_pearson(x, perm)) >= threshold) ++extreme;
      ++total;
    } while (std::next_permutation(idx.begin(), idx.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
  }
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < kPermutationSamples; ++s) {
    std::shuffle(perm.begin(), perm.end(), rng);
    if (std::abs(*raw_pearson(x, perm)) >= threshold) ++extreme;
  }
  // The observed ordering counts as one of the draws.
  return static_cast<double>(extreme + 1) / static_cast<double>(kPermutationSamples + 1);
}

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  require(window >= 1, "moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t count = std::min(window, i + 1);
    double s = 0.0;
    for (std::size_t k = i + 1 - count; k <= i; ++k) s += series[k];
    out[i] = s / static_cast<double>(count);
  }
  return out;
}

QuadraticFit fit_quadratic(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 3, "fit_quadratic: need at least 3 points");
  const auto n = static_cast<Eigen::Index>(x.size());
  // Center and scale x for conditioning, then map coefficients back.
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double sx = 0.0;
  for (double v : x) sx = std::max(sx, std::abs(v - mx));
  require(sx > 0.0, "fit_quadratic: x values are all equal");
  Mat a(n, 3);
  Vec b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = (x[static_cast<std::size_t>(i)] - mx) / sx;
    a(i, 0) = u * u;
    a(i, 1) = u;
    a(i, 2) = 1.0;
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const Vec coef = a.colPivHouseholderQr().solve(b);
  // y = A u^2 + B u + C with u = (x - mx) / sx
  const double A = coef(0) / (sx * sx), B = coef(1) / sx, C = coef(2);
  QuadraticFit fit;
  fit.a = A;
  fit.b = B - 2.0 * A * mx;
  fit.c = A * mx * mx - B * mx + C;
  return fit;
}

double linear_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "linear_slope: need at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  require(sxx > 0.0, "linear_slope: x values are all equal");
  return sxy / sxx;
}

}  // namespace routelab
