// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Memorization / generalization detection over checkpoint series, grouping by
// detection step, contamination scoring and parameter-dynamics summaries.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace routelab {

enum class SeriesKind { kLoss, kAccuracy };

std::string to_string(SeriesKind kind);
SeriesKind series_kind_from_string(const std::string& name);

struct CheckpointSeries {
  std::string sample_id;
  std::vector<std::int64_t> steps;  // strictly increasing
  std::vector<double> values;
  SeriesKind kind = SeriesKind::kLoss;

  void validate() const;
};

struct MemorizationThresholds {
  double epsilon = 0.5;
  double delta = 0.05;
};

/// Earliest checkpoint t* such that every checkpoint t >= t* has loss <= epsilon
/// and |loss_t - loss_T| <= delta, T being the final checkpoint.
std::optional<std::int64_t> memorization_step(const CheckpointSeries& series, const MemorizationThresholds& th);

/// Earliest checkpoint whose closed suffix has mean accuracy > acc_mean_min and at
/// most `max_errors` incorrect (zero) entries.
std::optional<std::int64_t> generalization_step(const CheckpointSeries& series, double acc_mean_min = 0.8,
                                                std::size_t max_errors = 1);

struct Detection {
  std::string sample_id;
  std::optional<std::int64_t> step;
};

struct DataGroup {
  std::int64_t key = 0;
  std::vector<std::string> members;
};

struct Grouping {
  std::vector<DataGroup> groups;  // ascending key
  std::size_t undetected = 0;
};

Grouping group_by_step(std::span<const Detection> detections);

/// Fraction of series memorized strictly before their final checkpoint.
double memorized_fraction(std::span<const CheckpointSeries> series, const MemorizationThresholds& th);

struct EpsilonCalibration {
  double epsilon = 0.0;
  double fraction = 0.0;
  bool in_band = false;  // false: band unreachable, `epsilon` is the nearest grid value
};

/// Smallest grid epsilon (multiples of `grid_step`) whose memorized fraction lies in
/// [band_low, band_high] with at least one memorized sample.
EpsilonCalibration calibrate_epsilon(std::span<const CheckpointSeries> series, double delta,
                                     double band_low = 0.20, double band_high = 0.25, double grid_step = 0.1);

/// Per-token log-probability with the mean and standard deviation of the
/// log-probability under the model's next-token distribution.
struct TokenStat {
  double log_prob = 0.0;
  double mean = 0.0;
  double stddev = 1.0;
};

/// Mean of the lowest ceil(k * n) standardized token scores (Min-K%++ style).
double contamination_score(std::span<const TokenStat> tokens, double k_fraction);

struct ScoredSample {
  std::string sample_id;
  double score = 0.0;
};

/// Drops the ceil(drop_fraction * n) highest scores (ties broken by sample id) and
/// returns the kept ids in input order.
std::vector<std::string> filter_contaminated(std::span<const ScoredSample> scores, double drop_fraction = 0.10);

struct ConvergenceStability {
  double speed = 0.0;      // mean(early changes) - mean(late changes)
  double stability = 0.0;  // 1 / stddev(changes)
  bool stability_capped = false;
};

inline constexpr double kStabilityFloor = 1e-12;

/// `split_fraction` of the series forms each of the early and late segments;
/// each segment needs at least two points.
ConvergenceStability convergence_and_stability(std::span<const double> changes, double split_fraction = 1.0 / 3.0);

}  // namespace routelab
