// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Routing-kernel Gram matrices, effective dimension, kernel ridge regression and
// the bias / variance / noise terms of the fixed-routing generalization bound.
//
//   Theta_route(x, x') = sum_j g_j(x) g_j(x') K_fj(x, x')
//   d_eff = Tr(H (H + lambda I)^-1)

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "routelab/linalg.hpp"
#include "routelab/moe.hpp"

namespace routelab {

enum class KernelProvenance { kEmpiricalGradient, kAnalytic };

struct KernelGram {
  Mat h;
  double lambda = 1.0;
  KernelProvenance provenance = KernelProvenance::kAnalytic;

  /// Symmetric within 1e-9 (relative), finite, lambda > 0.
  void validate() const;
};

/// Per-expert Gram matrices K_fj = B_j B_j^T, where row i of B_j is sample i's
/// gradient block for expert j.
std::vector<Mat> expert_gram(std::span<const Mat> blocks_per_expert);

/// H[i, i'] = sum_j g[i, j] g[i', j] K_fj[i, i'], with `gates` n x K.
KernelGram routing_gram(const Mat& gates, std::span<const Mat> expert_grams, double lambda);

/// Gradient blocks (n x p_j per expert) and gates (n x K) of a one-layer model at
/// theta(0) for the given inputs (columns of `x`).
struct RoutingFeatures {
  std::vector<Mat> blocks;
  Mat gates;
};
RoutingFeatures routing_features(const MoEModel& model, const Mat& x);

/// Full feature matrix (n x P) whose rows are Phi(x_i).
Mat ntk_feature_matrix(const MoEModel& model, const Mat& x);

/// Eigenvalues of a symmetric PSD matrix; values down to -1e-8 * max(1, trace scale)
/// are clamped to zero, anything more negative raises NumericalError.
Vec psd_eigenvalues(const Mat& h);

double effective_dimension(const Mat& h, double lambda);
inline double effective_dimension(const KernelGram& g) { return effective_dimension(g.h, g.lambda); }

struct RidgeFit {
  Vec coefficients;  // dual alpha (n) or primal delta-theta (p)
  Vec predictions;   // at the training inputs
};

/// alpha = (H + lambda I)^-1 y, predictions H alpha.
RidgeFit ridge_fit_dual(const Mat& h, const Vec& y, double lambda);

/// delta = (Phi^T Phi + lambda I)^-1 Phi^T y, predictions Phi delta; rows of Phi are samples.
RidgeFit ridge_fit_primal(const Mat& phi, const Vec& y, double lambda);

struct BoundReport {
  double bias = 0.0;
  double variance = 0.0;
  double noise = 0.0;
  double total = 0.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double sigma = 0.0;
  std::size_t n = 0;
  double delta_conf = 0.05;
  double lambda = 1.0;
};

BoundReport bound_terms(const Mat& h, const Vec& y, double lambda, double sigma, std::size_t n,
                        double delta_conf, double c1 = 1.0, double c2 = 1.0);

struct VarianceEstimate {
  double empirical = 0.0;
  // (sigma^2 / n) Tr(H (H + lambda I)^-1), the bound's variance term with C2 = 1.
  double analytic_trace = 0.0;
  // (sigma^2 / n) Tr((H (H + lambda I)^-1)^2), the exact fixed-design value.
  double analytic_exact = 0.0;
  std::size_t trials = 0;
};

/// Refits ridge on `trials` draws of N(0, sigma^2) label noise around `clean`
/// labels (zeros if empty) and averages the prediction variance over training inputs.
VarianceEstimate variance_monte_carlo(const Mat& phi, double lambda, double sigma, std::size_t trials,
                                      std::uint64_t seed, const Vec& clean = Vec());

}  // namespace routelab
