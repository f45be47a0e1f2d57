// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Cross-seed study relating routing diversity to kernel complexity. Data and
// expert initialization are held fixed; each seed re-draws only the frozen router.

#pragma once

#include <cstdint>
#include <vector>

#include "routelab/data.hpp"
#include "routelab/moe.hpp"
#include "routelab/stats.hpp"

namespace routelab {

struct StudyConfig {
  StudyConfig();

  MoEConfig model;  // router_frozen is forced on; num_layers must be 1
  ClusterSpec data;
  std::size_t num_samples = 200;
  double train_fraction = 0.5;
  std::size_t num_seeds = 30;
  std::uint64_t first_router_seed = 1;
  double tau = 0.7;
  // With lambda_relative the ridge used for d_eff is lambda * Tr(H) / n, so d_eff
  // reflects the shape of the spectrum rather than the overall gate magnitude.
  double lambda = 0.1;
  bool lambda_relative = true;
  // Brief expert training per seed, reported only; pathways and the
  // initialization-time kernel do not depend on it.
  std::size_t train_steps = 100;
  double learning_rate = 0.05;

  void validate() const;
};

inline constexpr std::size_t kMinStudySeeds = 10;

struct StudyPoint {
  std::uint64_t router_seed = 0;
  double mean_edit_distance = 0.0;
  double edit_distance_std = 0.0;
  double effective_dimension = 0.0;
  double lambda = 0.0;  // ridge actually used
  double mean_entropy = 0.0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  // Min-max normalized over all seeds.
  double normalized_distance = 0.0;
  double normalized_dimension = 0.0;
};

struct StudyResult {
  std::vector<StudyPoint> points;
  Correlation pearson;
  Correlation spearman;
  std::size_t train_size = 0;
  std::size_t pairs_per_seed = 0;
};

StudyPoint study_point(const StudyConfig& config, const ClusterData& data, std::uint64_t router_seed);

/// Runs every seed and correlates mean edit distance with effective dimension.
StudyResult appendix_b4_study(const StudyConfig& config);

}  // namespace routelab
