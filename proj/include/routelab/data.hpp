// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "routelab/linalg.hpp"
#include "routelab/moe.hpp"

namespace routelab {

/// Isotropic Gaussian clusters whose means lie uniformly on a sphere.
struct ClusterSpec {
  std::size_t num_clusters = 8;
  std::size_t dim = 100;
  double radius = 5.0;
  double stddev = 1.0;
  // Norm of a random shift shared by every cluster mean (0: clusters centred on the origin).
  double offset = 0.0;
  std::uint64_t seed = 0;
};

struct ClusterData {
  Mat means;                  // dim x num_clusters
  std::vector<double> label;  // per-cluster regression target
  std::vector<Sample> samples;
};

/// Draws `n` samples, cycling through clusters so every cluster is populated.
/// Each sample's target is its cluster label; ids are `<prefix><index>`.
ClusterData gaussian_clusters(const ClusterSpec& spec, std::size_t n, const std::string& prefix = "s");

/// Stacks sample inputs as columns.
Mat stack_inputs(const std::vector<Sample>& samples);

}  // namespace routelab
