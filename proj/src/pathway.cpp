// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "routelab/pathway.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "routelab/errors.hpp"

namespace routelab {

namespace {

// Slack for cumulative sums that should reach tau exactly (e.g. tau = 1).
constexpr double kCoverSlack = 1e-12;
constexpr double kSimplexTolerance = 1e-6;

void check_simplex(std::span<const double> w, const std::string& where) {
  double sum = 0.0;
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError(where + ": routing weight outside [0,1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) throw ValidationError(where + ": routing weights do not sum to 1");
}

template <class TokenFn>
PathwayDistanceStat pairwise_stat(std::size_t n, const PairPolicy& policy, TokenFn&& tokens_of) {
  require(n >= 2, "pairwise distance: need at least 2 pathways");
  const std::size_t total = n * (n - 1) / 2;
  bool all_pairs = policy.kind == PairPolicy::Kind::kAllPairs ||
                   (policy.kind == PairPolicy::Kind::kAuto && total <= policy.budget);
  const std::size_t wanted = policy.kind == PairPolicy::Kind::kSampled ? policy.sample_pairs : policy.budget;
  require(all_pairs || wanted >= 1, "pairwise distance: sample size must be >= 1");

  std::vector<std::vector<int>> tokens(n);
  for (std::size_t i = 0; i < n; ++i) tokens[i] = tokens_of(i);

  double sum = 0.0, sum_sq = 0.0;
  std::size_t count = 0;
  auto add = [&](std::size_t i, std::size_t j) {
    const auto d = static_cast<double>(token_edit_distance(tokens[i], tokens[j]));
    sum += d;
    sum_sq += d * d;
    ++count;
  };

  PathwayDistanceStat stat;
  if (all_pairs) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) add(i, j);
    stat.policy = "all-pairs";
  } else {
    std::mt19937_64 rng(policy.seed);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::uniform_int_distribution<std::size_t> second(0, n - 2);
    for (std::size_t s = 0; s < wanted; ++s) {
      const std::size_t i = first(rng);
      std::size_t j = second(rng);
      if (j >= i) ++j;
      add(i, j);
    }
    std::ostringstream desc;
    desc << "sampled:" << wanted << ":seed=" << policy.seed;
    stat.policy = desc.str();
  }
  stat.pairs = count;
  stat.mean = sum / static_cast<double>(count);
  stat.stddev = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(count) - stat.mean * stat.mean));
  return stat;
}

}  // namespace

std::vector<int> Pathway::tokens() const {
  std::vector<int> out;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l > 0) out.push_back(kLayerSeparator);
    out.insert(out.end(), layers[l].begin(), layers[l].end());
  }
  return out;
}

SampleRecords group_by_sample(std::span<const RoutingRecord> records) {
  SampleRecords grouped;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& r : records) {
    auto [it, inserted] = index.try_emplace(r.sample_id, grouped.size());
    if (inserted) grouped.emplace_back(r.sample_id, std::vector<RoutingRecord>{});
    grouped[it->second].second.push_back(r);
  }
  return grouped;
}

std::vector<std::vector<double>> mean_layer_weights(std::span<const RoutingRecord> records) {
  require(!records.empty(), "pathway: no routing records");
  std::size_t num_layers = 0;
  for (const auto& r : records) num_layers = std::max(num_layers, r.layer + 1);
  const std::size_t k = records.front().weights.size();
  require(k >= 1, "pathway: empty weight vector");
  std::vector<std::vector<double>> mean(num_layers, std::vector<double>(k, 0.0));
  std::vector<std::size_t> count(num_layers, 0);
  for (const auto& r : records) {
    require(r.weights.size() == k, "pathway: inconsistent expert count");
    check_simplex(r.weights, "pathway");
    for (std::size_t e = 0; e < k; ++e) mean[r.layer][e] += r.weights[e];
    ++count[r.layer];
  }
  for (std::size_t l = 0; l < num_layers; ++l) {
    if (count[l] == 0) throw ValidationError("pathway: missing records for layer " + std::to_string(l));
    for (double& v : mean[l]) v /= static_cast<double>(count[l]);
  }
  return mean;
}

std::vector<int> select_experts(std::span<const double> weights, double tau) {
  require(tau > 0.0 && tau <= 1.0, "select_experts: tau must lie in (0, 1]");
  std::vector<int> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return weights[static_cast<std::size_t>(a)] > weights[static_cast<std::size_t>(b)];
  });
  std::vector<int> chosen;
  double cumulative = 0.0;
  for (int e : order) {
    const double w = weights[static_cast<std::size_t>(e)];
    if (w <= 0.0) break;
    chosen.push_back(e);
    cumulative += w;
    if (cumulative >= tau - kCoverSlack) break;
  }
  return chosen;
}

Pathway extract_pathway(std::span<const RoutingRecord> records, double tau) {
  require(tau > 0.0 && tau <= 1.0, "extract_pathway: tau must lie in (0, 1]");
  Pathway p;
  p.tau = tau;
  p.sample_id = records.empty() ? std::string() : records.front().sample_id;
  for (const auto& w : mean_layer_weights(records)) p.layers.push_back(select_experts(w, tau));
  return p;
}

std::string encode_pathway(const Pathway& p) {
  std::string out;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    if (l > 0) out += '-';
    for (std::size_t i = 0; i < p.layers[l].size(); ++i) {
      if (i > 0) out += ',';
      out += std::to_string(p.layers[l][i]);
    }
  }
  return out;
}

Pathway decode_pathway(std::string_view encoded, double tau, std::string sample_id) {
  Pathway p;
  p.tau = tau;
  p.sample_id = std::move(sample_id);
  require(!encoded.empty(), "decode_pathway: empty string");
  std::size_t start = 0;
  while (start <= encoded.size()) {
    const std::size_t end = std::min(encoded.find('-', start), encoded.size());
    std::string_view layer = encoded.substr(start, end - start);
    require(!layer.empty(), "decode_pathway: empty layer");
    std::vector<int> experts;
    std::size_t s = 0;
    while (s <= layer.size()) {
      const std::size_t e = std::min(layer.find(',', s), layer.size());
      std::string_view tok = layer.substr(s, e - s);
      require(!tok.empty() && tok.find_first_not_of("0123456789") == std::string_view::npos,
              "decode_pathway: malformed expert index");
      experts.push_back(std::stoi(std::string(tok)));
      s = e + 1;
    }
    p.layers.push_back(std::move(experts));
    start = end + 1;
  }
  return p;
}

std::size_t token_edit_distance(std::span<const int> a, std::span<const int> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitute = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitute});
      diagonal = above;
    }
  }
  return row[b.size()];
}

std::size_t edit_distance(const Pathway& a, const Pathway& b) {
  require(a.tau == b.tau, "edit_distance: pathways were extracted with different thresholds");
  return token_edit_distance(a.tokens(), b.tokens());
}

PathwayDistanceStat mean_pairwise_distance(std::span<const Pathway> paths, const PairPolicy& policy) {
  for (const auto& p : paths)
    require(p.tau == paths.front().tau, "mean_pairwise_distance: mixed thresholds");
  return pairwise_stat(paths.size(), policy, [&](std::size_t i) { return paths[i].tokens(); });
}

PathwayDistanceStat layerwise_distance(std::span<const Pathway> paths, std::size_t layer,
                                       const PairPolicy& policy) {
  for (const auto& p : paths) {
    require(p.tau == paths.front().tau, "layerwise_distance: mixed thresholds");
    require(layer < p.layers.size(), "layerwise_distance: layer out of range");
  }
  return pairwise_stat(paths.size(), policy, [&](std::size_t i) { return paths[i].layers[layer]; });
}

double routing_entropy(std::span<const RoutingRecord> records) {
  const auto layers = mean_layer_weights(records);
  double total = 0.0;
  for (const auto& w : layers) {
    double h = 0.0;
    for (double g : w)
      if (g > 0.0) h -= g * std::log(g);
    total += h;
  }
  return total / static_cast<double>(layers.size());
}

}  // namespace routelab
