// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Cross-layer pathway consistency. Router rows act as expert embeddings; a
// sample's routing embedding at layer l is the gate-weighted sum of those rows.
//
//   C_i = 1 - mean_l cos(e_l, e_{l+1}) / (max_l cos(e_l, e_{l+1}) + eps),  eps = 1e-8
//
// raw_smoothness = 1 - C_i is reported alongside C_i. Note that with two layers the
// single normalized term is c / (c + eps), so C_i is ~0 for any positive cosine.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "routelab/linalg.hpp"
#include "routelab/moe.hpp"
#include "routelab/pathway.hpp"

namespace routelab {

inline constexpr double kConsistencyEpsilon = 1e-8;

struct RoutingEmbedding {
  std::size_t layer = 0;
  Vec vector;
};

struct ConsistencyScore {
  std::string sample_id;
  bool defined = false;
  // Set when the largest consecutive cosine is negative; the value is still
  // computed with the signed maximum.
  bool degenerate = false;
  std::string reason;  // why the score is undefined
  double c = 0.0;
  double raw_smoothness = 0.0;
  std::vector<double> cosines;
};

struct GroupConsistency {
  double mean_c = 0.0;
  double std_c = 0.0;
  double mean_smoothness = 0.0;
  double std_smoothness = 0.0;
  std::size_t defined = 0;
  std::size_t undefined = 0;
};

std::vector<Vec> expert_embeddings(const MoEModel& model, std::size_t layer);

RoutingEmbedding routing_embedding(const Mat& router, std::size_t layer, std::span<const double> gates);
RoutingEmbedding routing_embedding(const MoEModel& model, std::size_t layer, std::span<const double> gates);

ConsistencyScore pathway_consistency(std::span<const Mat> routers, std::span<const RoutingRecord> records);
ConsistencyScore pathway_consistency(const MoEModel& model, std::span<const RoutingRecord> records);

/// Mean and population standard deviation over defined scores; throws if none is defined.
GroupConsistency summarize_consistency(std::span<const ConsistencyScore> scores);
GroupConsistency group_consistency(std::span<const Mat> routers, const SampleRecords& samples);
GroupConsistency group_consistency(const MoEModel& model, const SampleRecords& samples);

}  // namespace routelab
