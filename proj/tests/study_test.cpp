// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "routelab/errors.hpp"
#include "routelab/study.hpp"

using namespace routelab;

namespace {

StudyConfig small_study() {
  StudyConfig c;
  c.model.num_experts = 6;
  c.model.input_dim = 12;
  c.data.dim = 12;
  c.num_samples = 40;
  c.num_seeds = 10;
  c.train_steps = 5;
  return c;
}

}  // namespace

TEST_CASE("study defaults use the full-scale setup") {
  const StudyConfig c;
  CHECK(c.model.num_experts == 16);
  CHECK(c.model.input_dim == 100);
  CHECK(c.num_samples == 200);
  CHECK(c.num_seeds >= 30);
}

TEST_CASE("study is deterministic and reports one point per seed") {
  const StudyConfig c = small_study();
  const StudyResult a = appendix_b4_study(c);
  const StudyResult b = appendix_b4_study(c);
  REQUIRE(a.points.size() == 10);
  CHECK(a.train_size == 20);
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].router_seed == c.first_router_seed + i);
    CHECK(a.points[i].mean_edit_distance == b.points[i].mean_edit_distance);
    CHECK(a.points[i].effective_dimension == b.points[i].effective_dimension);
    CHECK(a.points[i].effective_dimension > 0.0);
    CHECK(a.points[i].effective_dimension <= static_cast<double>(a.train_size));
    CHECK(a.points[i].normalized_distance >= 0.0);
    CHECK(a.points[i].normalized_distance <= 1.0);
  }
  CHECK(a.pearson.r == b.pearson.r);
}

TEST_CASE("study validation") {
  StudyConfig c = small_study();
  c.num_seeds = 9;
  CHECK_THROWS_AS(appendix_b4_study(c), ValidationError);
  c = small_study();
  c.model.num_layers = 2;
  CHECK_THROWS_AS(appendix_b4_study(c), ValidationError);
  c = small_study();
  c.train_fraction = 1.5;
  CHECK_THROWS_AS(appendix_b4_study(c), ValidationError);
}
