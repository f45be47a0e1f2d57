// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "routelab/dynamics.hpp"
#include "routelab/errors.hpp"

using namespace routelab;

namespace {

CheckpointSeries make_series(const std::vector<double>& values, SeriesKind kind, std::string id = "s") {
  CheckpointSeries s;
  s.sample_id = std::move(id);
  s.kind = kind;
  s.values = values;
  for (std::size_t i = 0; i < values.size(); ++i) s.steps.push_back(static_cast<std::int64_t>(10 * i + 5));
  return s;
}

}  // namespace

TEST_CASE("memorization step on worked series") {
  const MemorizationThresholds th{0.5, 0.05};
  const auto s = make_series({3.0, 2.1, 0.40, 0.38, 0.37}, SeriesKind::kLoss);
  CHECK(memorization_step(s, th) == s.steps[2]);
  const auto flat = make_series({0.1, 0.1, 0.1}, SeriesKind::kLoss);
  CHECK(memorization_step(flat, th) == flat.steps[0]);
  CHECK(!memorization_step(make_series({0.9, 0.8, 0.7}, SeriesKind::kLoss), th).has_value());
  CHECK_THROWS_AS(memorization_step(make_series({0.5}, SeriesKind::kAccuracy), th), ValidationError);
  CHECK_THROWS_AS(memorization_step(make_series({-1.0}, SeriesKind::kLoss), th), ValidationError);
}

TEST_CASE("generalization step on worked series") {
  const auto s = make_series({0, 1, 1, 1, 1}, SeriesKind::kAccuracy);
  CHECK(generalization_step(s, 0.8, 1) == s.steps[1]);
  const auto ones = make_series({1, 1, 1}, SeriesKind::kAccuracy);
  CHECK(generalization_step(ones, 0.8, 1) == ones.steps[0]);
  CHECK(!generalization_step(make_series({0, 0, 0}, SeriesKind::kAccuracy), 0.8, 1).has_value());
}

TEST_CASE("detectors agree with suffix-scan oracles on random series") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 12);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> loss(static_cast<std::size_t>(len(rng)));
    double level = 2.0 * u(rng);
    for (double& v : loss) v = (level *= 0.6 + 0.5 * u(rng));
    const double eps = 0.05 + u(rng);
    const double delta = 0.01 + 0.2 * u(rng);
    const auto s = make_series(loss, SeriesKind::kLoss);
    const auto want = oracle::memorization_index(loss, eps, delta);
    const auto got = memorization_step(s, {eps, delta});
    REQUIRE(got.has_value() == want.has_value());
    if (want) CHECK(*got == s.steps[*want]);

    std::vector<double> acc(loss.size());
    for (double& v : acc) v = u(rng) < 0.7 ? 1.0 : 0.0;
    const auto a = make_series(acc, SeriesKind::kAccuracy);
    const auto gw = oracle::generalization_index(acc, 0.6, 1);
    const auto gg = generalization_step(a, 0.6, 1);
    REQUIRE(gg.has_value() == gw.has_value());
    if (gw) CHECK(*gg == a.steps[*gw]);
  }
}

TEST_CASE("grouping by detection step") {
  std::vector<Detection> same{{"a", 5}, {"b", 5}, {"c", 5}};
  const Grouping g1 = group_by_step(same);
  REQUIRE(g1.groups.size() == 1);
  CHECK(g1.groups[0].members == std::vector<std::string>{"a", "b", "c"});

  std::vector<Detection> mixed{{"a", 30}, {"b", 10}, {"c", std::nullopt}, {"d", 20}, {"e", 10}};
  const Grouping g = group_by_step(mixed);
  CHECK(g.undetected == 1);
  REQUIRE(g.groups.size() == 3);
  CHECK(g.groups[0].key == 10);
  CHECK(g.groups[0].members == std::vector<std::string>{"b", "e"});
  std::size_t total = 0;
  for (const auto& grp : g.groups) total += grp.members.size();
  CHECK(total == 4);
}

TEST_CASE("epsilon calibration") {
  std::vector<CheckpointSeries> series;
  for (int i = 0; i < 100; ++i)
    series.push_back(make_series(std::vector<double>(4, i < 22 ? 0.45 : 5.0), SeriesKind::kLoss, "s" + std::to_string(i)));
  const auto cal = calibrate_epsilon(series, 0.05);
  CHECK(cal.in_band);
  CHECK(cal.epsilon == doctest::Approx(0.5));
  CHECK(cal.fraction == doctest::Approx(0.22));

  const auto any = calibrate_epsilon(series, 0.05, 0.0, 1.0);
  CHECK(any.epsilon == doctest::Approx(0.5));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<CheckpointSeries> random;
  for (int i = 0; i < 40; ++i) {
    std::vector<double> v(6);
    for (double& x : v) x = u(rng);
    std::sort(v.rbegin(), v.rend());
    random.push_back(make_series(v, SeriesKind::kLoss));
  }
  double previous = 0.0;
  for (int k = 1; k <= 25; ++k) {
    const double f = memorized_fraction(random, {0.1 * k, 0.3});
    CHECK(f >= previous);
    previous = f;
  }
}

TEST_CASE("contamination score and filtering") {
  std::vector<TokenStat> t{{-2, 0, 1}, {-1, 0, 1}, {0, 0, 1}, {1, 0, 1}};
  CHECK(contamination_score(t, 0.5) == doctest::Approx(-1.5));
  CHECK(contamination_score(t, 1.0) == doctest::Approx(-0.5));
  CHECK(contamination_score(std::vector<TokenStat>{{3, 1, 2}}, 0.2) == doctest::Approx(1.0));

  std::vector<ScoredSample> s;
  for (int i = 0; i < 10; ++i) s.push_back({"id" + std::to_string(i), static_cast<double>((i * 7) % 10)});
  CHECK(filter_contaminated(s, 0.0).size() == 10);
  const auto kept = filter_contaminated(s, 0.10);
  CHECK(kept.size() == 9);

  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> sc(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ScoredSample> r;
    for (int i = 0; i < 17; ++i) r.push_back({"x" + std::to_string(100 + i), static_cast<double>(sc(rng))});
    auto sorted = r;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      return a.score != b.score ? a.score > b.score : a.sample_id < b.sample_id;
    });
    std::vector<std::string> want;
    for (const auto& x : r) {
      const bool dropped = std::any_of(sorted.begin(), sorted.begin() + 4, [&](const auto& d) { return d.sample_id == x.sample_id; });
      if (!dropped) want.push_back(x.sample_id);
    }
    CHECK(filter_contaminated(r, 0.2) == want);  // ceil(3.4) = 4 dropped
  }
}

TEST_CASE("convergence speed and stability") {
  const auto c = convergence_and_stability(std::vector<double>{0.3, 0.3, 0.1, 0.1}, 0.5);
  CHECK(c.speed == doctest::Approx(0.2));
  CHECK(c.stability == doctest::Approx(10.0));
  const auto flat = convergence_and_stability(std::vector<double>(6, 0.4));
  CHECK(flat.speed == 0.0);
  CHECK(flat.stability_capped);
  CHECK(flat.stability == doctest::Approx(1.0 / kStabilityFloor));
  CHECK_THROWS_AS(convergence_and_stability(std::vector<double>{1, 2, 3}), ValidationError);
}
