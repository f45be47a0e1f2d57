// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "routelab/errors.hpp"
#include "routelab/kernel.hpp"

using namespace routelab;

namespace {

MoEModel one_layer(std::uint64_t seed, std::size_t experts = 4, std::size_t dim = 5) {
  MoEConfig c;
  c.num_experts = experts;
  c.input_dim = dim;
  c.hidden_dim = 6;
  c.seed = seed;
  return init_model(c);
}

Mat random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd;
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

}  // namespace

TEST_CASE("routing gram equals the full-feature gram") {
  std::mt19937_64 rng(4);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const MoEModel m = one_layer(seed);
    const Mat x = random_matrix(rng, 5, 7);
    const RoutingFeatures f = routing_features(m, x);
    const KernelGram g = routing_gram(f.gates, expert_gram(f.blocks), 0.1);
    const Mat phi = ntk_feature_matrix(m, x);
    const Mat full = phi * phi.transpose();
    CHECK((g.h - full).norm() / full.norm() < 1e-9);
    CHECK(g.h.diagonal().minCoeff() >= 0.0);
  }
}

TEST_CASE("gram special cases") {
  const MoEModel m = one_layer(3, 1);
  std::mt19937_64 rng(2);
  Mat x(5, 3);
  x.colwise() = random_matrix(rng, 5, 1).col(0);
  const RoutingFeatures f = routing_features(m, x);
  const auto grams = expert_gram(f.blocks);
  const KernelGram g = routing_gram(f.gates, grams, 1.0);
  CHECK((g.h - grams[0]).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((g.h.array() - g.h(0, 0)).abs().maxCoeff() < 1e-9);

  // Disjoint expert sets never interact.
  std::vector<Mat> blocks{random_matrix(rng, 2, 3), random_matrix(rng, 2, 3)};
  Mat gates(2, 2);
  gates << 1, 0, 0, 1;
  const KernelGram d = routing_gram(gates, expert_gram(blocks), 1.0);
  CHECK(d.h(0, 1) == 0.0);
  CHECK_THROWS_AS(routing_gram(gates, expert_gram(blocks), 0.0), ValidationError);
}

TEST_CASE("effective dimension") {
  CHECK(effective_dimension(Mat::Identity(6, 6), 1.0) == doctest::Approx(3.0).epsilon(1e-12));
  for (double c : {0.5, 2.0, 40.0}) {
    const double want = 6.0 * c / (c + 0.3);
    CHECK(std::abs(effective_dimension(c * Mat::Identity(6, 6), 0.3) - want) < 1e-10);
  }
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat h = oracle::random_psd(rng, 8, 1 + trial % 8);
    CHECK(std::abs(effective_dimension(h, 0.7) - oracle::solve_trace(h, 0.7)) < 1e-8);
  }
  Mat bad = Mat::Identity(2, 2);
  bad(0, 0) = -1.0;
  CHECK_THROWS_AS(effective_dimension(bad, 1.0), NumericalError);
}

TEST_CASE("ridge fits") {
  const Vec y = Vec::LinSpaced(4, 1.0, 4.0);
  const RidgeFit f = ridge_fit_dual(Mat::Identity(4, 4), y, 1.0);
  CHECK((f.predictions - y / 2.0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(ridge_fit_dual(Mat::Identity(4, 4), y, 1e12).predictions.cwiseAbs().maxCoeff() < 1e-10);

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat phi = random_matrix(rng, 9, 4 + trial);
    const Vec t = random_matrix(rng, 9, 1).col(0);
    const RidgeFit dual = ridge_fit_dual(phi * phi.transpose(), t, 0.4);
    const RidgeFit primal = ridge_fit_primal(phi, t, 0.4);
    CHECK((dual.predictions - primal.predictions).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("bound terms closed forms") {
  const Mat h = Mat::Identity(5, 5);
  const BoundReport b = bound_terms(h, Vec::Ones(5), 1.0, 1.0, 5, 0.05);
  CHECK(b.bias == doctest::Approx(0.25));
  CHECK(b.variance == doctest::Approx(0.5));
  CHECK(b.noise == doctest::Approx(std::log(20.0) / 5.0));
  CHECK(b.total == doctest::Approx(b.bias + b.variance + b.noise));
  const BoundReport quiet = bound_terms(h, Vec::Ones(5), 1.0, 0.0, 5, 0.05);
  CHECK(quiet.variance == 0.0);
  CHECK(quiet.noise == 0.0);
  CHECK_THROWS_AS(bound_terms(h, Vec::Ones(5), 1.0, 1.0, 5, 1.0), ValidationError);
}

TEST_CASE("variance Monte-Carlo") {
  std::mt19937_64 rng(13);
  const Mat phi = random_matrix(rng, 20, 5);
  const VarianceEstimate zero = variance_monte_carlo(phi, 0.5, 0.0, 50, 1);
  CHECK(zero.empirical == 0.0);
  const VarianceEstimate a = variance_monte_carlo(phi, 0.5, 1.0, 4000, 1);
  const VarianceEstimate b = variance_monte_carlo(phi, 0.5, 2.0, 4000, 2);
  CHECK(std::abs(a.empirical / a.analytic_exact - 1.0) < 0.05);
  CHECK(std::abs(b.empirical / (4.0 * a.empirical) - 1.0) < 0.08);
  CHECK(a.analytic_trace >= a.analytic_exact);
}
