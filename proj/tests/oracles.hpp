// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations used only by tests. Each one is written for
// clarity, not speed, and shares no code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "routelab/moe.hpp"

namespace routelab::oracle {

/// Quadratic Levenshtein table over integer tokens.
inline std::size_t dp_edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return d[a.size()][b.size()];
}

struct BruteAssignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total = 0.0;
};

/// Exhaustive search over injective maps of the shorter side; among totals within
/// `tie` of the best, keeps the lexicographically smallest sorted pair list.
inline BruteAssignment brute_force_assignment(const Eigen::MatrixXd& s, double tie = 0.0) {
  const auto rows = static_cast<std::size_t>(s.rows());
  const auto cols = static_cast<std::size_t>(s.cols());
  const bool by_rows = rows <= cols;
  const std::size_t small = std::min(rows, cols);
  std::vector<std::size_t> perm(std::max(rows, cols));
  std::iota(perm.begin(), perm.end(), 0);
  std::optional<BruteAssignment> best;
  do {
    BruteAssignment cand;
    for (std::size_t i = 0; i < small; ++i) {
      const std::size_t r = by_rows ? i : perm[i];
      const std::size_t c = by_rows ? perm[i] : i;
      cand.pairs.emplace_back(r, c);
      cand.total += s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    std::sort(cand.pairs.begin(), cand.pairs.end());
    if (!best || cand.total > best->total + tie ||
        (std::abs(cand.total - best->total) <= tie && cand.pairs < best->pairs)) {
      best = cand;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return *best;
}

/// Direct evaluation of the memorization definition at every candidate index.
inline std::optional<std::size_t> memorization_index(const std::vector<double>& loss, double eps, double delta) {
  const double last = loss.back();
  for (std::size_t t = 0; t < loss.size(); ++t) {
    bool ok = true;
    for (std::size_t u = t; u < loss.size(); ++u) ok = ok && loss[u] <= eps && std::abs(loss[u] - last) <= delta;
    if (ok) return t;
  }
  return std::nullopt;
}

inline std::optional<std::size_t> generalization_index(const std::vector<double>& acc, double mean_min,
                                                       std::size_t max_errors) {
  for (std::size_t t = 0; t < acc.size(); ++t) {
    double sum = 0.0;
    std::size_t errors = 0;
    for (std::size_t u = t; u < acc.size(); ++u) {
      sum += acc[u];
      if (acc[u] == 0.0) ++errors;
    }
    if (sum / static_cast<double>(acc.size() - t) > mean_min && errors <= max_errors) return t;
  }
  return std::nullopt;
}

/// Smallest start whose suffix has at most `allowed` strict decreases.
inline std::size_t sustained_rise_index(const std::vector<double>& acc, std::size_t allowed) {
  for (std::size_t s = 0; s < acc.size(); ++s) {
    std::size_t drops = 0;
    for (std::size_t i = s + 1; i < acc.size(); ++i)
      if (acc[i] < acc[i - 1]) ++drops;
    if (drops <= allowed) return s;
  }
  return acc.size() - 1;
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Covariance-formula Pearson coefficient.
inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Mid-ranks by counting: 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> count_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0.0, equal = 0.0;
    for (double v : x) {
      if (v < x[i]) less += 1.0;
      if (v == x[i]) equal += 1.0;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

/// Tr(H (H + lambda I)^-1) through a linear solve.
inline double solve_trace(const Eigen::MatrixXd& h, double lambda) {
  const Eigen::MatrixXd a = h + lambda * Eigen::MatrixXd::Identity(h.rows(), h.cols());
  return a.fullPivLu().solve(h).trace();
}

inline Eigen::MatrixXd random_psd(std::mt19937_64& rng, Eigen::Index n, Eigen::Index rank) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd b(n, rank);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < rank; ++j) b(i, j) = nd(rng);
  return b * b.transpose();
}

/// Visits every scalar parameter in a fixed order (routers, experts, readout).
inline void for_each_scalar(MoEParams& p, const std::function<void(double&)>& f) {
  auto visit = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) f(m.data()[i]);
  };
  for (auto& r : p.routers) visit(r);
  for (auto& layer : p.experts) {
    for (auto& e : layer) {
      visit(e.w1);
      visit(e.b1);
      visit(e.w2);
      visit(e.b2);
    }
  }
  visit(p.readout);
  if (p.readout.size() != 0) f(p.readout_bias);
}

inline std::vector<double> flatten_params(MoEParams p) {
  std::vector<double> out;
  for_each_scalar(p, [&](double& v) { out.push_back(v); });
  return out;
}

/// Central-difference gradient of sum_i w_i F(x_i) with respect to every scalar.
inline std::vector<double> fd_gradient(MoEModel model, const Eigen::MatrixXd& x, const Eigen::VectorXd& w,
                                       double step = 1e-5) {
  std::vector<double*> slots;
  for_each_scalar(model.mutable_params(), [&](double& v) { slots.push_back(&v); });
  std::vector<double> grad;
  for (double* slot : slots) {
    const double keep = *slot;
    *slot = keep + step;
    const double up = w.dot(forward_batch(model, x));
    *slot = keep - step;
    const double down = w.dot(forward_batch(model, x));
    *slot = keep;
    grad.push_back((up - down) / (2.0 * step));
  }
  return grad;
}

}  // namespace routelab::oracle
