// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Routing pathways: per-layer expert lists chosen by a cumulative routing-weight
// threshold, their string encoding, and token-level edit distance statistics.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "routelab/moe.hpp"

namespace routelab {

inline constexpr double kDefaultPathwayThreshold = 0.7;
inline constexpr int kLayerSeparator = -1;

struct Pathway {
  std::string sample_id;
  std::vector<std::vector<int>> layers;  // experts by descending mean weight
  double tau = kDefaultPathwayThreshold;

  /// Expert indices with a separator token between layers.
  std::vector<int> tokens() const;
  std::size_t num_layers() const { return layers.size(); }
  bool operator==(const Pathway&) const = default;
};

/// Records of one sample keyed by first appearance order.
using SampleRecords = std::vector<std::pair<std::string, std::vector<RoutingRecord>>>;

SampleRecords group_by_sample(std::span<const RoutingRecord> records);

/// Per-layer mean weight vectors of one sample's records (several records per
/// layer are token records and get averaged). Layers must be 0..L-1.
std::vector<std::vector<double>> mean_layer_weights(std::span<const RoutingRecord> records);

Pathway extract_pathway(std::span<const RoutingRecord> records, double tau = kDefaultPathwayThreshold);

/// Shortest weight-descending prefix whose cumulative weight reaches `tau`.
std::vector<int> select_experts(std::span<const double> weights, double tau);

/// "3,1,5-9,1": commas inside a layer, hyphens between layers.
std::string encode_pathway(const Pathway& p);
Pathway decode_pathway(std::string_view encoded, double tau, std::string sample_id = "");

/// Levenshtein distance with unit costs over integer tokens.
std::size_t token_edit_distance(std::span<const int> a, std::span<const int> b);

/// Token-level edit distance; throws if the pathways used different thresholds.
std::size_t edit_distance(const Pathway& a, const Pathway& b);

struct PairPolicy {
  enum class Kind { kAuto, kAllPairs, kSampled };
  Kind kind = Kind::kAuto;
  // kAuto enumerates every pair while n(n-1)/2 <= budget and samples `budget` pairs beyond.
  std::size_t budget = 20000;
  std::size_t sample_pairs = 20000;  // used by kSampled
  std::uint64_t seed = 0;
};

struct PathwayDistanceStat {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t pairs = 0;
  std::string policy;  // "all-pairs" or "sampled:<m>:seed=<s>"
};

PathwayDistanceStat mean_pairwise_distance(std::span<const Pathway> paths, const PairPolicy& policy = {});

/// Same statistic restricted to the layer-`layer` expert lists.
PathwayDistanceStat layerwise_distance(std::span<const Pathway> paths, std::size_t layer,
                                       const PairPolicy& policy = {});

/// Mean over layers of the Shannon entropy (nats) of the full gate vector.
double routing_entropy(std::span<const RoutingRecord> records);

}  // namespace routelab
