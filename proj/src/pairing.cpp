// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "routelab/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "routelab/errors.hpp"

namespace routelab {

namespace {

double assignment_value(const Mat& sim, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  Mat sub(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          sim(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
  const bool transpose = sub.rows() > sub.cols();
  const Mat cost = transpose ? Mat(-sub.transpose()) : Mat(-sub);
  const auto match = hungarian_min_cost(cost);
  double total = 0.0;
  for (std::size_t r = 0; r < match.size(); ++r) total -= cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(match[r]));
  return total;
}

}  // namespace

EmbeddedGroup make_embedded_group(std::string key, std::vector<Vec> members) {
  require(!members.empty(), "embedded group '" + key + "': no members");
  const auto dim = members.front().size();
  for (auto& v : members) {
    require(v.size() == dim, "embedded group '" + key + "': dimension mismatch");
    const double norm = v.norm();
    require(norm > 0.0 && std::isfinite(norm), "embedded group '" + key + "': zero or non-finite embedding");
    v /= norm;
  }
  return {std::move(key), std::move(members)};
}

Mat group_similarity(std::span<const EmbeddedGroup> train, std::span<const EmbeddedGroup> test) {
  require(!train.empty() && !test.empty(), "group_similarity: no groups");
  const auto dim = train.front().members.front().size();
  auto centroid = [&](const EmbeddedGroup& g) {
    require(!g.members.empty(), "group_similarity: empty group '" + g.key + "'");
    Vec c = Vec::Zero(dim);
    for (const auto& v : g.members) {
      require(v.size() == dim, "group_similarity: dimension mismatch in group '" + g.key + "'");
      c += v;
    }
    return Vec(c / static_cast<double>(g.members.size()));
  };
  // Mean of cross-pair dot products equals the dot product of the means.
  std::vector<Vec> test_centroids;
  for (const auto& g : test) test_centroids.push_back(centroid(g));
  Mat sim(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(test.size()));
  for (std::size_t a = 0; a < train.size(); ++a) {
    const Vec ca = centroid(train[a]);
    for (std::size_t b = 0; b < test.size(); ++b)
      sim(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = std::clamp(ca.dot(test_centroids[b]), -1.0, 1.0);
  }
  return sim;
}

std::vector<std::size_t> hungarian_min_cost(const Mat& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  const auto m = static_cast<std::size_t>(cost.cols());
  require(n >= 1 && n <= m, "hungarian_min_cost: need 1 <= rows <= cols");
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials method, 1-based with a virtual column 0.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

Assignment hungarian_match(const Mat& similarity) {
  require(similarity.rows() > 0 && similarity.cols() > 0, "hungarian_match: empty matrix");
  require(similarity.allFinite(), "hungarian_match: non-finite entries");
  const auto n = static_cast<std::size_t>(similarity.rows());
  const auto m = static_cast<std::size_t>(similarity.cols());
  const std::size_t target = std::min(n, m);

  std::vector<std::size_t> all_rows(n), all_cols(m);
  for (std::size_t i = 0; i < n; ++i) all_rows[i] = i;
  for (std::size_t j = 0; j < m; ++j) all_cols[j] = j;
  const double best = assignment_value(similarity, all_rows, all_cols);
  const double tol = 1e-10 * std::max(1.0, similarity.cwiseAbs().maxCoeff()) * static_cast<double>(target);

  // Fix rows in order, each to the smallest column that keeps the optimum
  // reachable; a row is left out only if no column does (possible when rows > cols).
  Assignment out;
  std::vector<std::size_t> free_rows = all_rows, free_cols = all_cols;
  double fixed = 0.0;
  for (std::size_t r = 0; r < n && out.pairs.size() < target; ++r) {
    std::erase(free_rows, r);
    bool placed = false;
    for (std::size_t c : std::vector<std::size_t>(free_cols)) {
      std::vector<std::size_t> cols = free_cols;
      std::erase(cols, c);
      const std::size_t remaining = target - out.pairs.size() - 1;
      if (std::min(free_rows.size(), cols.size()) < remaining) continue;
      const double gain = similarity(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      const double rest = remaining == 0 ? 0.0 : assignment_value(similarity, free_rows, cols);
      if (fixed + gain + rest >= best - tol) {
        out.pairs.emplace_back(r, c);
        fixed += gain;
        free_cols = std::move(cols);
        placed = true;
        break;
      }
    }
    (void)placed;
  }
  require(out.pairs.size() == target, "hungarian_match: internal error, incomplete assignment");
  out.total = 0.0;
  for (const auto& [r, c] : out.pairs) out.total += similarity(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

Vec synthetic_embedder(std::span<const double> features, std::size_t dim, std::uint64_t seed) {
  require(dim >= 1, "synthetic_embedder: dim must be >= 1");
  require(!features.empty(), "synthetic_embedder: no features");
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * features.size()));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec out = Vec::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    double acc = 0.0;
    for (double f : features) acc += normal(rng) * f;
    out(static_cast<Eigen::Index>(i)) = acc;
  }
  const double norm = out.norm();
  if (norm == 0.0 || !std::isfinite(norm)) {
    out.setZero();
    out(0) = 1.0;
    return out;
  }
  return out / norm;
}

}  // namespace routelab
