// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "routelab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "routelab/errors.hpp"

namespace routelab {

namespace {

// ceil() that ignores representation error such as 0.7 * 10 = 7.000000000000001.
std::size_t ceil_count(double fraction, std::size_t n) {
  const double x = fraction * static_cast<double>(n);
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

}  // namespace

std::string to_string(SeriesKind kind) { return kind == SeriesKind::kLoss ? "loss" : "accuracy"; }

SeriesKind series_kind_from_string(const std::string& name) {
  if (name == "loss") return SeriesKind::kLoss;
  if (name == "accuracy") return SeriesKind::kAccuracy;
  throw ValidationError("unknown series kind '" + name + "'");
}

void CheckpointSeries::validate() const {
  require(!steps.empty(), "series '" + sample_id + "': empty");
  require(steps.size() == values.size(), "series '" + sample_id + "': steps and values differ in length");
  for (std::size_t i = 1; i < steps.size(); ++i)
    require(steps[i] > steps[i - 1], "series '" + sample_id + "': steps not strictly increasing");
  for (double v : values) {
    require(std::isfinite(v), "series '" + sample_id + "': non-finite value");
    if (kind == SeriesKind::kLoss) require(v >= 0.0, "series '" + sample_id + "': negative loss");
    else require(v >= 0.0 && v <= 1.0, "series '" + sample_id + "': accuracy outside [0,1]");
  }
}

std::optional<std::int64_t> memorization_step(const CheckpointSeries& series, const MemorizationThresholds& th) {
  series.validate();
  require(series.kind == SeriesKind::kLoss, "memorization_step: expects a loss series");
  require(th.epsilon > 0.0 && th.delta > 0.0, "memorization_step: thresholds must be > 0");
  const double final_loss = series.values.back();
  std::optional<std::int64_t> found;
  // Walk back from T while both conditions keep holding.
  for (std::size_t i = series.values.size(); i-- > 0;) {
    const double v = series.values[i];
    if (v > th.epsilon || std::abs(v - final_loss) > th.delta) break;
    found = series.steps[i];
  }
  return found;
}

std::optional<std::int64_t> generalization_step(const CheckpointSeries& series, double acc_mean_min,
                                                std::size_t max_errors) {
  series.validate();
  require(series.kind == SeriesKind::kAccuracy, "generalization_step: expects an accuracy series");
  const std::size_t n = series.values.size();
  // Suffix sums from the back, then take the earliest qualifying start.
  std::vector<double> suffix_sum(n + 1, 0.0);
  std::vector<std::size_t> suffix_errors(n + 1, 0);
  for (std::size_t i = n; i-- > 0;) {
    suffix_sum[i] = suffix_sum[i + 1] + series.values[i];
    suffix_errors[i] = suffix_errors[i + 1] + (series.values[i] == 0.0 ? 1 : 0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = suffix_sum[i] / static_cast<double>(n - i);
    if (mean > acc_mean_min && suffix_errors[i] <= max_errors) return series.steps[i];
  }
  return std::nullopt;
}

Grouping group_by_step(std::span<const Detection> detections) {
  std::map<std::int64_t, std::vector<std::string>> by_step;
  Grouping g;
  for (const auto& d : detections) {
    if (d.step) by_step[*d.step].push_back(d.sample_id);
    else ++g.undetected;
  }
  for (auto& [key, members] : by_step) g.groups.push_back({key, std::move(members)});
  return g;
}

double memorized_fraction(std::span<const CheckpointSeries> series, const MemorizationThresholds& th) {
  require(!series.empty(), "memorized_fraction: no series");
  std::size_t count = 0;
  for (const auto& s : series) {
    auto t = memorization_step(s, th);
    if (t && *t < s.steps.back()) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(series.size());
}

EpsilonCalibration calibrate_epsilon(std::span<const CheckpointSeries> series, double delta, double band_low,
                                     double band_high, double grid_step) {
  require(!series.empty(), "calibrate_epsilon: no series");
  require(grid_step > 0.0 && band_low <= band_high, "calibrate_epsilon: bad grid or band");
  double max_loss = 0.0;
  for (const auto& s : series) {
    s.validate();
    for (double v : s.values) max_loss = std::max(max_loss, v);
  }
  // Past the largest loss every epsilon gives the same fraction.
  const auto last = static_cast<std::size_t>(std::ceil(max_loss / grid_step)) + 1;
  EpsilonCalibration nearest;
  double nearest_gap = std::numeric_limits<double>::infinity();
  const double unit = 1.0 / static_cast<double>(series.size());
  for (std::size_t k = 1; k <= last; ++k) {
    const double eps = static_cast<double>(k) * grid_step;
    const double frac = memorized_fraction(series, {eps, delta});
    const bool has_any = frac >= unit * 0.5;
    if (frac >= band_low && frac <= band_high && has_any) return {eps, frac, true};
    const double gap = frac < band_low ? band_low - frac : (frac > band_high ? frac - band_high : 0.0);
    if (gap < nearest_gap) {
      nearest_gap = gap;
      nearest = {eps, frac, false};
    }
  }
  return nearest;
}

double contamination_score(std::span<const TokenStat> tokens, double k_fraction) {
  require(!tokens.empty(), "contamination_score: no tokens");
  require(k_fraction > 0.0 && k_fraction <= 1.0, "contamination_score: k must lie in (0, 1]");
  std::vector<double> z;
  z.reserve(tokens.size());
  for (const auto& t : tokens) {
    require(t.stddev > 0.0, "contamination_score: token stddev must be > 0");
    z.push_back((t.log_prob - t.mean) / t.stddev);
  }
  const std::size_t keep = std::max<std::size_t>(1, ceil_count(k_fraction, z.size()));
  std::partial_sort(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(keep), z.end());
  return std::accumulate(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(keep), 0.0) / static_cast<double>(keep);
}

std::vector<std::string> filter_contaminated(std::span<const ScoredSample> scores, double drop_fraction) {
  require(drop_fraction >= 0.0 && drop_fraction < 1.0, "filter_contaminated: drop fraction must lie in [0, 1)");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a].score != scores[b].score) return scores[a].score > scores[b].score;
    return scores[a].sample_id < scores[b].sample_id;
  });
  const std::size_t drop = std::min(scores.size(), ceil_count(drop_fraction, scores.size()));
  std::vector<bool> dropped(scores.size(), false);
  for (std::size_t i = 0; i < drop; ++i) dropped[order[i]] = true;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (!dropped[i]) kept.push_back(scores[i].sample_id);
  return kept;
}

ConvergenceStability convergence_and_stability(std::span<const double> changes, double split_fraction) {
  require(split_fraction > 0.0 && split_fraction <= 0.5, "convergence_and_stability: split must lie in (0, 0.5]");
  const auto segment = static_cast<std::size_t>(std::floor(split_fraction * static_cast<double>(changes.size()) + 1e-9));
  require(segment >= 2, "convergence_and_stability: too few points for the requested split");
  auto mean_of = [](std::span<const double> s) {
    return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  };
  ConvergenceStability out;
  out.speed = mean_of(changes.first(segment)) - mean_of(changes.last(segment));
  const double mu = mean_of(changes);
  double var = 0.0;
  for (double c : changes) var += (c - mu) * (c - mu);
  const double sd = std::sqrt(var / static_cast<double>(changes.size()));
  out.stability_capped = sd < kStabilityFloor;
  out.stability = 1.0 / std::max(sd, kStabilityFloor);
  return out;
}

}  // namespace routelab
