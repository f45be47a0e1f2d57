// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "routelab/consistency.hpp"

#include <algorithm>
#include <cmath>

#include "routelab/errors.hpp"

namespace routelab {

std::vector<Vec> expert_embeddings(const MoEModel& model, std::size_t layer) {
  require(layer < model.config().num_layers, "expert_embeddings: layer out of range");
  const Mat& w = model.params().routers[layer];
  std::vector<Vec> rows;
  rows.reserve(static_cast<std::size_t>(w.rows()));
  for (Eigen::Index k = 0; k < w.rows(); ++k) rows.emplace_back(w.row(k).transpose());
  return rows;
}

RoutingEmbedding routing_embedding(const Mat& router, std::size_t layer, std::span<const double> gates) {
  require(static_cast<Eigen::Index>(gates.size()) == router.rows(), "routing_embedding: gate length mismatch");
  double sum = 0.0;
  for (double g : gates) {
    require(std::isfinite(g) && g >= -1e-6 && g <= 1.0 + 1e-6, "routing_embedding: gate outside [0,1]");
    sum += g;
  }
  require(std::abs(sum - 1.0) <= 1e-6, "routing_embedding: gates do not sum to 1");
  RoutingEmbedding e;
  e.layer = layer;
  e.vector = Vec::Zero(router.cols());
  for (Eigen::Index k = 0; k < router.rows(); ++k) e.vector += gates[static_cast<std::size_t>(k)] * router.row(k).transpose();
  return e;
}

RoutingEmbedding routing_embedding(const MoEModel& model, std::size_t layer, std::span<const double> gates) {
  require(layer < model.config().num_layers, "routing_embedding: layer out of range");
  return routing_embedding(model.params().routers[layer], layer, gates);
}

ConsistencyScore pathway_consistency(std::span<const Mat> routers, std::span<const RoutingRecord> records) {
  ConsistencyScore score;
  score.sample_id = records.empty() ? std::string() : records.front().sample_id;
  const auto gates = mean_layer_weights(records);
  require(gates.size() <= routers.size(), "pathway_consistency: more layers than routers");
  if (gates.size() < 2) {
    score.reason = "fewer than 2 layers";
    return score;
  }
  std::vector<Vec> embeddings;
  for (std::size_t l = 0; l < gates.size(); ++l) {
    embeddings.push_back(routing_embedding(routers[l], l, gates[l]).vector);
    if (embeddings.back().norm() == 0.0) {
      score.reason = "zero-norm routing embedding at layer " + std::to_string(l);
      return score;
    }
  }
  for (std::size_t l = 0; l + 1 < embeddings.size(); ++l) {
    const Vec& a = embeddings[l];
    const Vec& b = embeddings[l + 1];
    score.cosines.push_back(a.dot(b) / (a.norm() * b.norm()));
  }
  const double peak = *std::max_element(score.cosines.begin(), score.cosines.end());
  score.degenerate = peak < 0.0;
  const double denom = peak + kConsistencyEpsilon;
  double sum = 0.0;
  for (double c : score.cosines) sum += c / denom;
  const double average = sum / static_cast<double>(score.cosines.size());
  if (!std::isfinite(average)) {
    score.reason = "normalizer vanished";
    return score;
  }
  score.raw_smoothness = average;
  score.c = 1.0 - average;
  score.defined = true;
  return score;
}

ConsistencyScore pathway_consistency(const MoEModel& model, std::span<const RoutingRecord> records) {
  return pathway_consistency(model.params().routers, records);
}

GroupConsistency summarize_consistency(std::span<const ConsistencyScore> scores) {
  GroupConsistency g;
  double sc = 0.0, sc2 = 0.0, ss = 0.0, ss2 = 0.0;
  for (const auto& s : scores) {
    if (!s.defined) {
      ++g.undefined;
      continue;
    }
    ++g.defined;
    sc += s.c;
    sc2 += s.c * s.c;
    ss += s.raw_smoothness;
    ss2 += s.raw_smoothness * s.raw_smoothness;
  }
  if (g.defined == 0) throw ValidationError("group_consistency: no sample has a defined score");
  const double n = static_cast<double>(g.defined);
  g.mean_c = sc / n;
  g.mean_smoothness = ss / n;
  g.std_c = std::sqrt(std::max(0.0, sc2 / n - g.mean_c * g.mean_c));
  g.std_smoothness = std::sqrt(std::max(0.0, ss2 / n - g.mean_smoothness * g.mean_smoothness));
  return g;
}

GroupConsistency group_consistency(std::span<const Mat> routers, const SampleRecords& samples) {
  require(!samples.empty(), "group_consistency: no samples");
  std::vector<ConsistencyScore> scores;
  scores.reserve(samples.size());
  for (const auto& [id, recs] : samples) scores.push_back(pathway_consistency(routers, recs));
  return summarize_consistency(scores);
}

GroupConsistency group_consistency(const MoEModel& model, const SampleRecords& samples) {
  return group_consistency(model.params().routers, samples);
}

}  // namespace routelab
