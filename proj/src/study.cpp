// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "routelab/study.hpp"

#include <algorithm>
#include <cmath>

#include "routelab/errors.hpp"
#include "routelab/kernel.hpp"
#include "routelab/pathway.hpp"

namespace routelab {

namespace {

double mean_squared_error(const MoEModel& model, std::span<const Sample> samples) {
  std::vector<Sample> copy(samples.begin(), samples.end());
  const Vec pred = forward_batch(model, stack_inputs(copy));
  double s = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double r = pred(static_cast<Eigen::Index>(i)) - samples[i].y;
    s += r * r;
  }
  return s / static_cast<double>(samples.size());
}

void min_max(std::vector<StudyPoint>& points, double StudyPoint::*src, double StudyPoint::*dst) {
  double lo = points.front().*src, hi = lo;
  for (const auto& p : points) {
    lo = std::min(lo, p.*src);
    hi = std::max(hi, p.*src);
  }
  for (auto& p : points) p.*dst = hi > lo ? (p.*src - lo) / (hi - lo) : 0.0;
}

}  // namespace

// Tight clusters and a sharp router make routing a function of the cluster, so
// seeds differ mainly in how many clusters share experts.
StudyConfig::StudyConfig() {
  data.radius = 1.0;
  data.stddev = 0.03;
  model.router_init_scale = 50.0;
}

void StudyConfig::validate() const {
  model.validate();
  require(model.num_layers == 1, "study: the kernel is defined for one-layer models");
  require(model.input_dim == data.dim, "study: model input_dim must equal data dim");
  require(num_samples >= 4, "study: need at least 4 samples");
  require(train_fraction > 0.0 && train_fraction < 1.0, "study: train_fraction must lie in (0, 1)");
  require(num_seeds >= kMinStudySeeds, "study: at least 10 router seeds are required for a correlation");
  require(tau > 0.0 && tau <= 1.0, "study: tau must lie in (0, 1]");
  require(lambda > 0.0, "study: lambda must be positive");
}

StudyPoint study_point(const StudyConfig& config, const ClusterData& data, std::uint64_t router_seed) {
  MoEConfig mc = config.model;
  mc.router_frozen = true;
  mc.router_seed = router_seed;
  MoEModel model = init_model(mc);

  const auto n_train = static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(data.samples.size())));
  require(n_train >= 2 && n_train < data.samples.size(), "study: split leaves an empty side");
  std::span<const Sample> all(data.samples);
  const auto train = all.first(n_train);
  const auto validation = all.subspan(n_train);
  std::vector<Sample> train_copy(train.begin(), train.end());
  const Mat x = stack_inputs(train_copy);

  StudyPoint point;
  point.router_seed = router_seed;

  std::vector<Pathway> paths;
  paths.reserve(train.size());
  double entropy = 0.0;
  for (const auto& s : train) {
    const auto fr = forward(model, std::span<const double>(s.x.data(), static_cast<std::size_t>(s.x.size())), s.id);
    paths.push_back(extract_pathway(fr.records, config.tau));
    entropy += routing_entropy(fr.records);
  }
  PairPolicy policy;
  policy.kind = PairPolicy::Kind::kAllPairs;
  const auto dist = mean_pairwise_distance(paths, policy);
  point.mean_edit_distance = dist.mean;
  point.edit_distance_std = dist.stddev;
  point.mean_entropy = entropy / static_cast<double>(train.size());

  const RoutingFeatures features = routing_features(model, x);
  const auto grams = expert_gram(features.blocks);
  const KernelGram gram = routing_gram(features.gates, grams, 1.0);
  point.lambda = config.lambda_relative ? config.lambda * gram.h.trace() / static_cast<double>(gram.h.rows()) : config.lambda;
  point.effective_dimension = effective_dimension(gram.h, point.lambda);

  if (config.train_steps > 0) {
    TrainHyper hyper;
    hyper.learning_rate = config.learning_rate;
    hyper.steps = config.train_steps;
    train_experts(model, train, hyper);
  }
  point.train_loss = mean_squared_error(model, train);
  point.validation_loss = mean_squared_error(model, validation);
  return point;
}

StudyResult appendix_b4_study(const StudyConfig& config) {
  config.validate();
  const ClusterData data = gaussian_clusters(config.data, config.num_samples);
  StudyResult result;
  for (std::size_t s = 0; s < config.num_seeds; ++s)
    result.points.push_back(study_point(config, data, config.first_router_seed + s));
  min_max(result.points, &StudyPoint::mean_edit_distance, &StudyPoint::normalized_distance);
  min_max(result.points, &StudyPoint::effective_dimension, &StudyPoint::normalized_dimension);

  std::vector<double> dist, deff;
  for (const auto& p : result.points) {
    dist.push_back(p.mean_edit_distance);
    deff.push_back(p.effective_dimension);
  }
  result.pearson = pearson(dist, deff);
  result.spearman = spearman(dist, deff);
  result.train_size = static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(config.num_samples)));
  result.pairs_per_seed = result.train_size * (result.train_size - 1) / 2;
  return result;
}

}  // namespace routelab
