// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "routelab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "routelab/errors.hpp"

namespace routelab {

namespace {

constexpr double kNegativeEigenTolerance = 1e-8;

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be finite and > 0");
}

}  // namespace

void KernelGram::validate() const {
  check_lambda(lambda);
  require(h.rows() == h.cols(), "kernel gram: matrix is not square");
  if (!h.allFinite()) throw NumericalError("kernel gram: non-finite entries");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) throw NumericalError("kernel gram: not symmetric");
}

std::vector<Mat> expert_gram(std::span<const Mat> blocks_per_expert) {
  require(!blocks_per_expert.empty(), "expert_gram: no experts");
  const auto n = blocks_per_expert.front().rows();
  std::vector<Mat> grams;
  grams.reserve(blocks_per_expert.size());
  for (const Mat& b : blocks_per_expert) {
    require(b.rows() == n, "expert_gram: inconsistent sample counts");
    grams.push_back(b * b.transpose());
  }
  return grams;
}

KernelGram routing_gram(const Mat& gates, std::span<const Mat> expert_grams, double lambda) {
  check_lambda(lambda);
  require(static_cast<std::size_t>(gates.cols()) == expert_grams.size(), "routing_gram: gate columns != experts");
  const auto n = gates.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = gates.row(i).sum();
    require(std::abs(s - 1.0) <= 1e-6 && gates.row(i).minCoeff() >= 0.0, "routing_gram: gate row off the simplex");
  }
  KernelGram g;
  g.lambda = lambda;
  g.provenance = KernelProvenance::kEmpiricalGradient;
  g.h = Mat::Zero(n, n);
  for (std::size_t j = 0; j < expert_grams.size(); ++j) {
    const Mat& k = expert_grams[j];
    require(k.rows() == n && k.cols() == n, "routing_gram: expert gram shape mismatch");
    const Vec gj = gates.col(static_cast<Eigen::Index>(j));
    g.h.array() += (gj * gj.transpose()).array() * k.array();
  }
  return g;
}

RoutingFeatures routing_features(const MoEModel& model, const Mat& x) {
  require(model.config().scalar_experts(), "routing_features: one-layer models only");
  const auto n = x.cols();
  RoutingFeatures f;
  f.gates.resize(n, static_cast<Eigen::Index>(model.config().num_experts));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec xi = x.col(i);
    std::span<const double> xs(xi.data(), static_cast<std::size_t>(xi.size()));
    auto blocks = expert_gradient_blocks(model, xs);
    if (f.blocks.empty())
      for (const auto& b : blocks) f.blocks.emplace_back(n, b.size());
    for (std::size_t j = 0; j < blocks.size(); ++j) f.blocks[j].row(i) = blocks[j].transpose();
    f.gates.row(i) = initial_gates(model, xs).transpose();
  }
  return f;
}

Mat ntk_feature_matrix(const MoEModel& model, const Mat& x) {
  Mat phi;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const Vec xi = x.col(i);
    const Vec row = ntk_features(model, std::span<const double>(xi.data(), static_cast<std::size_t>(xi.size())));
    if (i == 0) phi.resize(x.cols(), row.size());
    phi.row(i) = row.transpose();
  }
  return phi;
}

Vec psd_eigenvalues(const Mat& h) {
  require(h.rows() == h.cols() && h.rows() > 0, "psd_eigenvalues: matrix must be square and nonempty");
  if (!h.allFinite()) throw NumericalError("psd_eigenvalues: non-finite matrix");
  Eigen::SelfAdjointEigenSolver<Mat> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("psd_eigenvalues: eigendecomposition failed");
  Vec mu = solver.eigenvalues();
  const double scale = std::max(1.0, std::abs(h.trace()));
  if (mu.minCoeff() < -kNegativeEigenTolerance * scale)
    throw NumericalError("psd_eigenvalues: matrix is not positive semidefinite");
  return mu.cwiseMax(0.0);
}

double effective_dimension(const Mat& h, double lambda) {
  check_lambda(lambda);
  const Vec mu = psd_eigenvalues(h);
  return (mu.array() / (mu.array() + lambda)).sum();
}

RidgeFit ridge_fit_dual(const Mat& h, const Vec& y, double lambda) {
  check_lambda(lambda);
  require(h.rows() == h.cols() && h.rows() == y.size(), "ridge_fit_dual: shape mismatch");
  const Mat a = h + lambda * Mat::Identity(h.rows(), h.cols());
  Eigen::LDLT<Mat> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw NumericalError("ridge_fit_dual: factorization failed");
  RidgeFit fit;
  fit.coefficients = ldlt.solve(y);
  fit.predictions = h * fit.coefficients;
  return fit;
}

RidgeFit ridge_fit_primal(const Mat& phi, const Vec& y, double lambda) {
  check_lambda(lambda);
  require(phi.rows() == y.size(), "ridge_fit_primal: shape mismatch");
  const Mat a = phi.transpose() * phi + lambda * Mat::Identity(phi.cols(), phi.cols());
  Eigen::LDLT<Mat> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw NumericalError("ridge_fit_primal: factorization failed");
  RidgeFit fit;
  fit.coefficients = ldlt.solve(phi.transpose() * y);
  fit.predictions = phi * fit.coefficients;
  return fit;
}

BoundReport bound_terms(const Mat& h, const Vec& y, double lambda, double sigma, std::size_t n,
                        double delta_conf, double c1, double c2) {
  check_lambda(lambda);
  require(sigma >= 0.0 && std::isfinite(sigma), "bound_terms: sigma must be >= 0");
  require(n > 0, "bound_terms: n must be > 0");
  require(delta_conf > 0.0 && delta_conf < 1.0, "bound_terms: delta must lie in (0, 1)");
  require(h.rows() == h.cols() && h.rows() == y.size(), "bound_terms: shape mismatch");
  require(c1 >= 0.0 && c2 >= 0.0, "bound_terms: constants must be >= 0");
  Eigen::SelfAdjointEigenSolver<Mat> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("bound_terms: eigendecomposition failed");
  const Vec mu = psd_eigenvalues(h);
  const Vec proj = solver.eigenvectors().transpose() * y;
  const double quad = (proj.array().square() / (mu.array() + lambda).square()).sum();
  const double trace = (mu.array() / (mu.array() + lambda)).sum();
  const double nd = static_cast<double>(n);
  BoundReport r;
  r.c1 = c1;
  r.c2 = c2;
  r.sigma = sigma;
  r.n = n;
  r.delta_conf = delta_conf;
  r.lambda = lambda;
  r.bias = c1 * lambda * lambda / nd * quad;
  r.variance = c2 * sigma * sigma * trace / nd;
  r.noise = c2 * sigma * sigma * std::log(1.0 / delta_conf) / nd;
  r.total = r.bias + r.variance + r.noise;
  return r;
}

VarianceEstimate variance_monte_carlo(const Mat& phi, double lambda, double sigma, std::size_t trials,
                                      std::uint64_t seed, const Vec& clean) {
  check_lambda(lambda);
  require(trials >= 2, "variance_monte_carlo: need at least 2 trials");
  require(sigma >= 0.0, "variance_monte_carlo: sigma must be >= 0");
  const auto n = phi.rows();
  const Vec base = clean.size() == 0 ? Vec(Vec::Zero(n)) : clean;
  require(base.size() == n, "variance_monte_carlo: label length mismatch");
  const Mat h = phi * phi.transpose();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Vec mean = Vec::Zero(n), m2 = Vec::Zero(n);
  Vec labels(n);
  const Mat a = h + lambda * Mat::Identity(n, n);
  Eigen::LDLT<Mat> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw NumericalError("variance_monte_carlo: factorization failed");
  for (std::size_t t = 0; t < trials; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) labels(i) = base(i) + sigma * noise(rng);
    const Vec pred = h * ldlt.solve(labels);
    // Welford update per training point.
    const Vec diff = pred - mean;
    mean += diff / static_cast<double>(t + 1);
    m2.array() += diff.array() * (pred - mean).array();
  }
  VarianceEstimate est;
  est.trials = trials;
  est.empirical = (m2 / static_cast<double>(trials - 1)).mean();
  const Vec mu = psd_eigenvalues(h);
  const double nd = static_cast<double>(n);
  est.analytic_trace = sigma * sigma * (mu.array() / (mu.array() + lambda)).sum() / nd;
  est.analytic_exact = sigma * sigma * (mu.array() / (mu.array() + lambda)).square().sum() / nd;
  return est;
}

}  // namespace routelab
