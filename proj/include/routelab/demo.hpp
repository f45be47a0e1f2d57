// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic memorization-then-generalization run on a multi-layer MoE, with
// every downstream analysis attached: detection, grouping, pathway and
// consistency trajectories, trend fits, correlation table and pairing.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "routelab/data.hpp"
#include "routelab/dynamics.hpp"
#include "routelab/moe.hpp"
#include "routelab/pairing.hpp"
#include "routelab/stats.hpp"

namespace routelab {

struct DemoConfig {
  DemoConfig();

  MoEConfig model;
  ClusterSpec data;
  std::size_t num_train = 64;
  std::size_t num_test = 512;
  TrainHyper train;
  double tau = 0.7;
  // Unset: calibrated on the training losses.
  std::optional<double> epsilon;
  double delta = 0.05;
  double epsilon_grid_step = 0.1;
  std::vector<double> robustness_deltas{0.03, 0.05};
  // A held-out prediction is correct when |prediction - target| < tolerance * label scale.
  double accuracy_tolerance = 0.2;
  std::size_t moving_average_window = 3;
  std::size_t embedding_dim = 16;
  std::uint64_t permutation_seed = 0;

  void validate() const;
};

struct CheckpointMetrics {
  std::int64_t step = 0;
  double train_loss = 0.0;
  double train_loss_ma = 0.0;
  double validation_loss = 0.0;
  double heldout_accuracy = 0.0;
  double edit_distance = 0.0;  // all training samples
  double edit_distance_std = 0.0;
  std::size_t distance_pairs = 0;
  std::vector<double> layer_distance;
  std::vector<double> layer_distance_std;
  double smoothness = 0.0;     // mean raw_smoothness over training samples
  double consistency = 0.0;    // mean C_i
  double entropy = 0.0;
};

struct GroupTrajectory {
  std::int64_t key = 0;
  std::vector<std::string> members;
  std::vector<double> distance;  // per checkpoint
  std::vector<double> distance_std;
  std::size_t distance_pairs = 0;
  std::vector<std::vector<double>> layer_distance;  // [layer][checkpoint]
  std::vector<std::vector<double>> layer_distance_std;
  std::vector<double> smoothness;
  std::vector<double> smoothness_std;
  std::vector<double> consistency;
  std::size_t undefined_scores = 0;
  QuadraticFit distance_trend;  // post-key checkpoints, x = step
  double distance_slope = 0.0;
};

struct CorrelationReport {
  std::string metric;
  std::string expected;  // "positive" | "negative"
  Correlation pearson;
  Correlation spearman;
  bool consistent = false;  // pearson sign matches the expected direction
};

struct RobustnessRow {
  double epsilon = 0.0;
  double delta = 0.0;
  std::optional<std::int64_t> group_key;
  std::size_t group_size = 0;
  double slope = 0.0;
  int trend_sign = 0;
};

struct Signature {
  std::int64_t group_key = 0;
  std::size_t post_points = 0;
  double peak_distance = 0.0;
  double final_distance = 0.0;
  bool distance_below_peak = false;
  std::size_t smoothness_violations = 0;        // over all post-key checkpoints
  std::size_t smoothness_violations_first5 = 0;  // over the 5 checkpoints after the key
  bool smoothness_non_decreasing = false;
  // Widest post-key window where distance falls by more than 10% while the
  // training loss moves by less than 5%.
  std::optional<std::pair<std::int64_t, std::int64_t>> plateau_window;
  double plateau_loss_change = 0.0;
  double plateau_distance_drop = 0.0;
};

struct DemoBundle {
  DemoConfig config;
  std::vector<std::int64_t> steps;
  std::vector<CheckpointMetrics> checkpoints;
  std::vector<CheckpointSeries> train_series;  // per-sample loss
  std::vector<CheckpointSeries> test_series;   // per-sample 0/1 correctness
  std::vector<RoutingRecord> routing;           // training samples, every checkpoint
  std::vector<std::vector<Mat>> routers;        // [checkpoint][layer]
  std::vector<ParamNorms> norms;
  double epsilon = 0.0;
  EpsilonCalibration calibration;
  Grouping memorization;
  Grouping generalization;
  std::vector<GroupTrajectory> groups;  // memorization groups with >= 2 members
  std::optional<std::size_t> earliest_group;
  std::vector<std::string> pair_labels;  // "Pretrain@p -> Test@q"
  Mat pair_similarity;
  Assignment assignment;
  std::size_t correlation_start = 0;  // checkpoint index
  std::vector<CorrelationReport> correlations;
  std::vector<RobustnessRow> robustness;
  std::map<ParamType, ConvergenceStability> convergence;
  std::map<ParamType, std::vector<double>> param_changes;
  Signature signature;
};

/// Raw output of the demo training run; everything the analysis consumes.
struct DemoRun {
  std::vector<std::int64_t> steps;
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::vector<std::vector<RoutingRecord>> records;  // [checkpoint], training samples
  std::vector<std::vector<Mat>> routers;            // [checkpoint][layer]
  std::vector<CheckpointSeries> train_series;       // per-sample squared error
  std::vector<CheckpointSeries> test_series;        // per-sample 0/1 correctness
  std::vector<double> train_loss;                   // [checkpoint]
  std::vector<double> validation_loss;              // [checkpoint]
  std::vector<ParamNorms> norms;
};

/// First checkpoint index from which accuracy never decreases, allowing one drop.
std::size_t sustained_rise_start(std::span<const double> accuracy, std::size_t allowed_violations = 1);

/// One report per metric; metrics listed in order with their expected sign.
struct MetricColumn {
  std::string name;
  std::string expected;
  std::vector<double> values;
};
std::vector<CorrelationReport> correlation_table(std::span<const MetricColumn> metrics, std::span<const double> accuracy,
                                                 std::size_t start, std::uint64_t permutation_seed = 0);

/// Number of strict decreases in a series.
std::size_t count_decreases(std::span<const double> series);

DemoRun train_demo_model(const DemoConfig& config);
DemoBundle analyze_demo(const DemoConfig& config, const DemoRun& run);
DemoBundle run_grokking_demo(const DemoConfig& config);

}  // namespace routelab
