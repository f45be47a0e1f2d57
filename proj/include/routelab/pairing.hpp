// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training-group / test-group pairing: mean cross-pair cosine similarity between
// groups of embeddings, then a maximum-similarity one-to-one assignment.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "routelab/linalg.hpp"

namespace routelab {

struct EmbeddedGroup {
  std::string key;
  std::vector<Vec> members;  // unit norm
};

/// Normalizes every vector; all must share one dimension and be nonzero.
EmbeddedGroup make_embedded_group(std::string key, std::vector<Vec> members);

/// Entry (a, b) is the mean cosine similarity over all cross pairs of train[a] x test[b].
Mat group_similarity(std::span<const EmbeddedGroup> train, std::span<const EmbeddedGroup> test);

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), sorted by row
  double total = 0.0;
};

/// Maximum-total-similarity assignment of min(rows, cols) pairs. Among optimal
/// assignments the lexicographically smallest sorted pair list is returned.
Assignment hungarian_match(const Mat& similarity);

/// Minimum-cost assignment for rows <= cols: returns the column of every row.
std::vector<std::size_t> hungarian_min_cost(const Mat& cost);

/// Deterministic stand-in for a sentence encoder: a fixed Gaussian projection of
/// the feature vector, normalized to unit length.
Vec synthetic_embedder(std::span<const double> features, std::size_t dim = 64, std::uint64_t seed = 0x5eed);

}  // namespace routelab
