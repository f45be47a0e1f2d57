// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "routelab/errors.hpp"
#include "routelab/pathway.hpp"

using namespace routelab;

namespace {

std::vector<RoutingRecord> records_for(const std::string& id, const std::vector<std::vector<double>>& layers) {
  std::vector<RoutingRecord> out;
  for (std::size_t l = 0; l < layers.size(); ++l) out.push_back({id, 0, l, layers[l]});
  return out;
}

Pathway random_pathway(std::mt19937_64& rng, std::size_t layers, int experts) {
  std::uniform_int_distribution<int> e(0, experts - 1);
  std::uniform_int_distribution<int> len(1, 3);
  Pathway p;
  for (std::size_t l = 0; l < layers; ++l) {
    std::vector<int> chosen;
    const int n = len(rng);
    while (static_cast<int>(chosen.size()) < n) {
      const int k = e(rng);
      if (std::find(chosen.begin(), chosen.end(), k) == chosen.end()) chosen.push_back(k);
    }
    p.layers.push_back(chosen);
  }
  return p;
}

}  // namespace

TEST_CASE("expert selection covers tau by descending weight") {
  const std::vector<double> w{0.5, 0.3, 0.15, 0.05};
  CHECK(select_experts(w, 0.7) == std::vector<int>{0, 1});
  CHECK(select_experts(std::vector<double>{0.1, 0.6, 0.0, 0.3}, 1.0) == std::vector<int>{1, 3, 0});
  CHECK(select_experts(std::vector<double>{1.0}, 0.7) == std::vector<int>{0});
  CHECK_THROWS_AS(select_experts(w, 0.0), ValidationError);
  CHECK_THROWS_AS(select_experts(w, 1.5), ValidationError);
}

TEST_CASE("pathway extraction averages repeated records per layer") {
  auto recs = records_for("a", {{0.9, 0.1}, {0.2, 0.8}});
  recs.push_back({"a", 0, 0, {0.3, 0.7}});
  const Pathway p = extract_pathway(recs, 0.7);
  CHECK(p.sample_id == "a");
  REQUIRE(p.layers.size() == 2);
  CHECK(p.layers[0] == std::vector<int>{0, 1});  // mean weights [0.6, 0.4]
  CHECK(p.layers[1] == std::vector<int>{1});
}

TEST_CASE("pathway encoding") {
  Pathway p;
  p.layers = {{3, 1, 5}, {9, 1}};
  CHECK(encode_pathway(p) == "3,1,5-9,1");
  Pathway single;
  single.layers = {{0}};
  CHECK(encode_pathway(single) == "0");
  CHECK(p.tokens() == std::vector<int>{3, 1, 5, kLayerSeparator, 9, 1});

  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    Pathway r = random_pathway(rng, 1 + static_cast<std::size_t>(i % 4), 16);
    r.tau = 0.7;
    CHECK(decode_pathway(encode_pathway(r), 0.7) == r);
  }
  CHECK_THROWS_AS(decode_pathway("1,,2", 0.7), ValidationError);
  CHECK_THROWS_AS(decode_pathway("", 0.7), ValidationError);
}

TEST_CASE("token edit distance matches the DP table") {
  CHECK(token_edit_distance(std::vector<int>{3, 1, 5}, std::vector<int>{3, 2, 5}) == 1);
  CHECK(token_edit_distance(std::vector<int>{}, std::vector<int>{1, 2, 3, 4}) == 4);
  CHECK(token_edit_distance(std::vector<int>{7, 7}, std::vector<int>{7, 7}) == 0);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> len(0, 20);
  std::uniform_int_distribution<int> tok(-1, 5);
  for (int i = 0; i < 500; ++i) {
    std::vector<int> a(static_cast<std::size_t>(len(rng)));
    std::vector<int> b(static_cast<std::size_t>(len(rng)));
    for (int& t : a) t = tok(rng);
    for (int& t : b) t = tok(rng);
    CHECK(token_edit_distance(a, b) == oracle::dp_edit_distance(a, b));
  }
}

TEST_CASE("mean pairwise distance") {
  std::mt19937_64 rng(2);
  std::vector<Pathway> same(5, random_pathway(rng, 3, 8));
  const PathwayDistanceStat s0 = mean_pairwise_distance(same);
  CHECK(s0.mean == 0.0);
  CHECK(s0.stddev == 0.0);
  CHECK(s0.pairs == 10);
  CHECK(s0.policy == "all-pairs");

  std::vector<Pathway> paths;
  for (int i = 0; i < 120; ++i) paths.push_back(random_pathway(rng, 3, 8));
  const PathwayDistanceStat all = mean_pairwise_distance(paths);
  double sum = 0.0, sq = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t j = i + 1; j < paths.size(); ++j) {
      const double d = static_cast<double>(oracle::dp_edit_distance(paths[i].tokens(), paths[j].tokens()));
      sum += d;
      sq += d * d;
      ++pairs;
    }
  }
  const double mean = sum / static_cast<double>(pairs);
  CHECK(all.pairs == pairs);
  CHECK(all.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(all.stddev == doctest::Approx(std::sqrt(sq / static_cast<double>(pairs) - mean * mean)).epsilon(1e-9));

  PairPolicy sampled;
  sampled.kind = PairPolicy::Kind::kSampled;
  sampled.sample_pairs = 2000;
  sampled.seed = 5;
  const PathwayDistanceStat approx = mean_pairwise_distance(paths, sampled);
  CHECK(approx.pairs == 2000);
  CHECK(std::abs(approx.mean - all.mean) < 3.0 * all.stddev / std::sqrt(2000.0));
  CHECK(approx.policy == "sampled:2000:seed=5");
  CHECK(mean_pairwise_distance(paths, sampled).mean == approx.mean);

  CHECK_THROWS_AS(mean_pairwise_distance(std::vector<Pathway>(1, paths[0])), ValidationError);
}

TEST_CASE("layerwise distance") {
  std::mt19937_64 rng(4);
  std::vector<Pathway> paths;
  for (int i = 0; i < 30; ++i) paths.push_back(random_pathway(rng, 3, 6));
  // Sum of layer distances bounds the full distance for every pair.
  for (std::size_t i = 0; i + 1 < paths.size(); ++i) {
    const auto& a = paths[i];
    const auto& b = paths[i + 1];
    std::size_t layered = 0;
    for (std::size_t l = 0; l < 3; ++l) layered += oracle::dp_edit_distance(a.layers[l], b.layers[l]);
    CHECK(layered >= edit_distance(a, b));
  }
  std::vector<Pathway> one_layer;
  for (int i = 0; i < 10; ++i) one_layer.push_back(random_pathway(rng, 1, 6));
  CHECK(layerwise_distance(one_layer, 0).mean == mean_pairwise_distance(one_layer).mean);

  std::vector<Pathway> shared = paths;
  for (auto& p : shared) p.layers[1] = {2, 4};
  CHECK(layerwise_distance(shared, 1).mean == 0.0);
  CHECK_THROWS_AS(layerwise_distance(shared, 3), ValidationError);
}

TEST_CASE("routing entropy") {
  CHECK(routing_entropy(records_for("a", {{0.25, 0.25, 0.25, 0.25}})) == doctest::Approx(std::log(4.0)));
  CHECK(routing_entropy(records_for("a", {{0.0, 1.0, 0.0}})) == 0.0);
  CHECK(routing_entropy(records_for("a", {{0.5, 0.5, 0.0, 0.0}})) == doctest::Approx(std::log(2.0)));
}
