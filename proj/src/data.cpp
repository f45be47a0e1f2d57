// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "routelab/data.hpp"

#include <cstdio>
#include <random>

#include "routelab/errors.hpp"

namespace routelab {

ClusterData gaussian_clusters(const ClusterSpec& spec, std::size_t n, const std::string& prefix) {
  require(spec.num_clusters >= 1 && spec.dim >= 1, "gaussian_clusters: empty spec");
  require(spec.radius >= 0.0 && spec.stddev >= 0.0 && spec.offset >= 0.0, "gaussian_clusters: negative scale");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> sign(0, 1);

  ClusterData data;
  const auto d = static_cast<Eigen::Index>(spec.dim);
  data.means.resize(d, static_cast<Eigen::Index>(spec.num_clusters));
  for (std::size_t c = 0; c < spec.num_clusters; ++c) {
    Vec m(d);
    for (Eigen::Index i = 0; i < d; ++i) m(i) = normal(rng);
    data.means.col(static_cast<Eigen::Index>(c)) = m.normalized() * spec.radius;
    data.label.push_back(sign(rng) ? 1.0 : -1.0);
  }
  if (spec.offset > 0.0) {
    // Drawn after the means so that offset = 0 reproduces the unshifted data exactly.
    Vec shift(d);
    for (Eigen::Index i = 0; i < d; ++i) shift(i) = normal(rng);
    data.means.colwise() += shift.normalized() * spec.offset;
  }
  const int width = n > 1 ? static_cast<int>(std::to_string(n - 1).size()) : 1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % spec.num_clusters;
    Sample s;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", width, i);
    s.id = prefix + buf;
    s.cluster = static_cast<int>(c);
    s.x = data.means.col(static_cast<Eigen::Index>(c));
    for (Eigen::Index j = 0; j < d; ++j) s.x(j) += spec.stddev * normal(rng);
    s.y = data.label[c];
    data.samples.push_back(std::move(s));
  }
  return data;
}

Mat stack_inputs(const std::vector<Sample>& samples) {
  require(!samples.empty(), "stack_inputs: no samples");
  Mat x(samples.front().x.size(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require(samples[i].x.size() == x.rows(), "stack_inputs: ragged samples");
    x.col(static_cast<Eigen::Index>(i)) = samples[i].x;
  }
  return x;
}

}  // namespace routelab
