// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "routelab/errors.hpp"
#include "routelab/stats.hpp"

using namespace routelab;

TEST_CASE("pearson exact cases") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(2 * v + 1);
  CHECK(pearson(x, y).r == doctest::Approx(1.0).epsilon(1e-15));
  std::vector<double> neg;
  for (double v : x) neg.push_back(-v);
  CHECK(pearson(x, neg).r == doctest::Approx(-1.0).epsilon(1e-15));
  const auto flat = pearson(x, std::vector<double>(5, 3.0));
  CHECK(!flat.defined);
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), ValidationError);
}

TEST_CASE("pearson matches the covariance formula") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(20), y(20);
    for (int i = 0; i < 20; ++i) {
      x[i] = nd(rng);
      y[i] = 0.4 * x[i] + nd(rng);
    }
    CHECK(std::abs(pearson(x, y).r - oracle::pearson_r(x, y)) < 1e-12);
  }
}

TEST_CASE("p-values follow the t distribution") {
  CHECK(correlation_p_value(0.5, 10) == doctest::Approx(0.14111328125).epsilon(1e-10));
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const std::vector<double> y{2, 1, 4, 3, 7, 5, 6, 9, 10, 8};
  CHECK(pearson(x, y).p == doctest::Approx(0.00034361219776328256).epsilon(1e-9));
  CHECK(correlation_p_value(1.0, 10) == 0.0);
}

TEST_CASE("spearman uses mid-ranks") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> cube;
  for (double v : x) cube.push_back(v * v * v);
  CHECK(spearman(x, cube).r == doctest::Approx(1.0));
  const std::vector<double> rev{5, 4, 3, 2, 1};
  CHECK(spearman(x, rev).r == doctest::Approx(-1.0));
  CHECK(mid_ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});

  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> small(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(15), b(15);
    for (int i = 0; i < 15; ++i) {
      a[i] = small(rng);
      b[i] = small(rng) + 0.5 * a[i];
    }
    const auto s = spearman(a, b);
    if (!s.defined) continue;
    CHECK(std::abs(s.r - oracle::pearson_r(oracle::count_ranks(a), oracle::count_ranks(b))) < 1e-12);
    CHECK(s.r == pearson(mid_ranks(a), mid_ranks(b)).r);
  }
}

TEST_CASE("permutation p-value is exact for small n and reproducible") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{1, 2, 3, 4};
  // 2 of the 24 orderings reach |r| = 1.
  CHECK(permutation_p_value(x, y) == doctest::Approx(2.0 / 24.0));
  const std::vector<double> a{0.3, 0.1, 0.9, 0.4, 0.5, 0.2};
  const std::vector<double> b{0.2, 0.3, 0.8, 0.1, 0.7, 0.4};
  CHECK(permutation_p_value(a, b, 4) == permutation_p_value(a, b, 4));
}

TEST_CASE("moving average") {
  CHECK(moving_average(std::vector<double>{1, 2, 3}, 2) == std::vector<double>{1, 1.5, 2.5});
  CHECK(moving_average(std::vector<double>{4, 4, 4, 4}, 3) == std::vector<double>{4, 4, 4, 4});
  const std::vector<double> s{3, 1, 4, 1, 5};
  CHECK(moving_average(s, 1) == s);
  CHECK_THROWS_AS(moving_average(s, 0), ValidationError);
}

TEST_CASE("quadratic and linear fits recover exact polynomials") {
  std::vector<double> x, y, lin;
  for (int i = 0; i < 8; ++i) {
    x.push_back(100.0 * i);
    y.push_back(2e-5 * x.back() * x.back() - 0.03 * x.back() + 7.0);
    lin.push_back(-0.25 * x.back() + 1.0);
  }
  const QuadraticFit f = fit_quadratic(x, y);
  CHECK(f.a == doctest::Approx(2e-5).epsilon(1e-8));
  CHECK(f.b == doctest::Approx(-0.03).epsilon(1e-8));
  CHECK(f.c == doctest::Approx(7.0).epsilon(1e-8));
  CHECK(f.evaluate(250.0) == doctest::Approx(2e-5 * 250 * 250 - 0.03 * 250 + 7.0));
  CHECK(linear_slope(x, lin) == doctest::Approx(-0.25));
}
