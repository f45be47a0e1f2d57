// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "routelab/demo.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "routelab/consistency.hpp"
#include "routelab/errors.hpp"
#include "routelab/pathway.hpp"

namespace routelab {

namespace {

constexpr double kPlateauLossChange = 0.05;
constexpr double kPlateauDistanceDrop = 0.10;
constexpr std::size_t kFirstWindow = 5;

std::vector<double> column(const std::vector<CheckpointMetrics>& rows, double CheckpointMetrics::*field) {
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.*field);
  return out;
}

// Pathways, scores and entropy of one subset of samples at one checkpoint.
struct SubsetSummary {
  double distance = 0.0;
  double distance_std = 0.0;
  std::size_t pairs = 0;
  std::vector<double> layer_distance;
  std::vector<double> layer_distance_std;
  GroupConsistency consistency;
  double entropy = 0.0;
};

SubsetSummary summarize_subset(const SampleRecords& samples, std::span<const Mat> routers, double tau) {
  SubsetSummary s;
  std::vector<Pathway> paths;
  for (const auto& [id, recs] : samples) {
    paths.push_back(extract_pathway(recs, tau));
    s.entropy += routing_entropy(recs);
  }
  s.entropy /= static_cast<double>(samples.size());
  PairPolicy policy;
  const auto all = mean_pairwise_distance(paths, policy);
  s.distance = all.mean;
  s.distance_std = all.stddev;
  s.pairs = all.pairs;
  for (std::size_t l = 0; l < routers.size(); ++l) {
    const auto layer = layerwise_distance(paths, l, policy);
    s.layer_distance.push_back(layer.mean);
    s.layer_distance_std.push_back(layer.stddev);
  }
  s.consistency = group_consistency(routers, samples);
  return s;
}

SampleRecords select_samples(const SampleRecords& all, const std::set<std::string>& members) {
  SampleRecords out;
  for (const auto& entry : all)
    if (members.count(entry.first)) out.push_back(entry);
  return out;
}

std::optional<std::size_t> earliest_group_index(const std::vector<GroupTrajectory>& groups, std::int64_t first_step) {
  for (std::size_t g = 0; g < groups.size(); ++g)
    if (groups[g].key > first_step) return g;
  return std::nullopt;
}

std::size_t first_index_at_or_after(const std::vector<std::int64_t>& steps, std::int64_t key) {
  return static_cast<std::size_t>(std::lower_bound(steps.begin(), steps.end(), key) - steps.begin());
}

Grouping detect_memorization(const std::vector<CheckpointSeries>& series, const MemorizationThresholds& th) {
  std::vector<Detection> det;
  for (const auto& s : series) det.push_back({s.sample_id, memorization_step(s, th)});
  return group_by_step(det);
}

}  // namespace

DemoConfig::DemoConfig() {
  model.num_experts = 8;
  model.input_dim = 32;
  model.hidden_dim = 16;
  model.num_layers = 4;
  model.router_frozen = false;
  model.seed = 1;
  model.router_init_scale = 1.0;
  data.num_clusters = 4;
  data.dim = 32;
  data.radius = 3.0;
  data.stddev = 0.5;
  data.seed = 2;
  train.learning_rate = 0.05;
  train.steps = 6000;
  train.weight_decay = 0.03;
  train.router_weight_decay = 0.0;
  train.router_lr_scale = 10.0;
}

void DemoConfig::validate() const {
  model.validate();
  require(model.num_layers >= 2, "demo: consistency needs at least 2 layers");
  require(!model.router_frozen, "demo: the router must be trainable");
  require(model.input_dim == data.dim, "demo: model input_dim must equal data dim");
  require(num_train >= 4 && num_test >= 1, "demo: need at least 4 training and 1 held-out sample");
  require(train.steps >= 20, "demo: need at least 20 training steps");
  require(tau > 0.0 && tau <= 1.0, "demo: tau must lie in (0, 1]");
  require(!epsilon || *epsilon > 0.0, "demo: epsilon must be > 0");
  require(delta > 0.0, "demo: delta must be > 0");
  require(epsilon_grid_step > 0.0, "demo: epsilon grid step must be > 0");
  require(accuracy_tolerance > 0.0, "demo: accuracy tolerance must be > 0");
  require(moving_average_window >= 1, "demo: moving average window must be >= 1");
  for (double d : robustness_deltas) require(d > 0.0, "demo: robustness deltas must be > 0");
}

std::size_t count_decreases(std::span<const double> series) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < series.size(); ++i)
    if (series[i] < series[i - 1]) ++n;
  return n;
}

std::size_t sustained_rise_start(std::span<const double> accuracy, std::size_t allowed_violations) {
  require(!accuracy.empty(), "sustained_rise_start: empty series");
  // Scan backwards, extending the suffix while it keeps within the violation budget.
  std::size_t start = accuracy.size() - 1;
  std::size_t violations = 0;
  while (start > 0) {
    const bool drop = accuracy[start] < accuracy[start - 1];
    if (drop && violations == allowed_violations) break;
    if (drop) ++violations;
    --start;
  }
  return start;
}

std::vector<CorrelationReport> correlation_table(std::span<const MetricColumn> metrics, std::span<const double> accuracy,
                                                 std::size_t start, std::uint64_t permutation_seed) {
  require(start < accuracy.size() && accuracy.size() - start >= 3,
          "correlation_table: need at least 3 checkpoints after the start");
  const std::span<const double> acc = accuracy.subspan(start);
  std::vector<CorrelationReport> out;
  for (const auto& m : metrics) {
    require(m.values.size() == accuracy.size(), "correlation_table: metric '" + m.name + "' is not aligned");
    require(m.expected == "positive" || m.expected == "negative", "correlation_table: bad expected direction");
    const std::span<const double> v = std::span<const double>(m.values).subspan(start);
    CorrelationReport r;
    r.metric = m.name;
    r.expected = m.expected;
    r.pearson = pearson(v, acc);
    r.spearman = spearman(v, acc);
    if (r.pearson.defined && acc.size() <= kPermutationMaxN) r.pearson.permutation_p = permutation_p_value(v, acc, permutation_seed);
    if (r.spearman.defined && acc.size() <= kPermutationMaxN) {
      const auto rv = mid_ranks(v);
      const auto ra = mid_ranks(acc);
      r.spearman.permutation_p = permutation_p_value(rv, ra, permutation_seed);
    }
    r.consistent = r.pearson.defined && (m.expected == "positive" ? r.pearson.r > 0.0 : r.pearson.r < 0.0);
    out.push_back(std::move(r));
  }
  return out;
}

DemoRun train_demo_model(const DemoConfig& config) {
  config.validate();
  DemoRun run;
  const ClusterData data = gaussian_clusters(config.data, config.num_train + config.num_test);
  run.train.assign(data.samples.begin(), data.samples.begin() + static_cast<std::ptrdiff_t>(config.num_train));
  run.test.assign(data.samples.begin() + static_cast<std::ptrdiff_t>(config.num_train), data.samples.end());
  const Mat x_train = stack_inputs(run.train);
  const Mat x_test = stack_inputs(run.test);
  double label_scale = 0.0;
  for (double l : data.label) label_scale = std::max(label_scale, std::abs(l));
  const double tolerance = config.accuracy_tolerance * label_scale;

  MoEModel model = init_model(config.model);
  std::vector<std::vector<double>> test_correct;
  auto hook = [&](std::size_t step, const MoEModel& m) {
    std::vector<Mat> gates;
    const Vec pred = forward_batch(m, x_train, &gates);
    std::vector<RoutingRecord> records;
    double train_loss = 0.0;
    for (std::size_t i = 0; i < run.train.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      for (std::size_t l = 0; l < gates.size(); ++l) {
        RoutingRecord r;
        r.sample_id = run.train[i].id;
        r.checkpoint_step = static_cast<std::int64_t>(step);
        r.layer = l;
        r.weights.assign(gates[l].col(col).data(), gates[l].col(col).data() + gates[l].rows());
        records.push_back(std::move(r));
      }
      train_loss += std::pow(pred(col) - run.train[i].y, 2);
    }
    run.records.push_back(std::move(records));
    run.train_loss.push_back(train_loss / static_cast<double>(run.train.size()));
    const Vec pt = forward_batch(m, x_test);
    double validation_loss = 0.0;
    std::vector<double> correct;
    for (std::size_t i = 0; i < run.test.size(); ++i) {
      const double err = pt(static_cast<Eigen::Index>(i)) - run.test[i].y;
      validation_loss += err * err;
      correct.push_back(std::abs(err) < tolerance ? 1.0 : 0.0);
    }
    run.validation_loss.push_back(validation_loss / static_cast<double>(run.test.size()));
    test_correct.push_back(std::move(correct));
    run.routers.push_back(m.params().routers);
  };
  const TrainingTrace trace = train_experts(model, run.train, config.train, hook);
  const std::size_t n_ckpt = trace.steps.size();
  for (auto s : trace.steps) run.steps.push_back(static_cast<std::int64_t>(s));
  run.norms = trace.norms;

  for (std::size_t i = 0; i < run.train.size(); ++i) {
    CheckpointSeries s;
    s.sample_id = run.train[i].id;
    s.kind = SeriesKind::kLoss;
    s.steps = run.steps;
    for (std::size_t t = 0; t < n_ckpt; ++t) s.values.push_back(trace.sample_loss[t][i]);
    run.train_series.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < run.test.size(); ++i) {
    CheckpointSeries s;
    s.sample_id = run.test[i].id;
    s.kind = SeriesKind::kAccuracy;
    s.steps = run.steps;
    for (std::size_t t = 0; t < n_ckpt; ++t) s.values.push_back(test_correct[t][i]);
    run.test_series.push_back(std::move(s));
  }
  return run;
}

DemoBundle analyze_demo(const DemoConfig& config, const DemoRun& run) {
  config.validate();
  const std::size_t n_ckpt = run.steps.size();
  require(n_ckpt >= 3, "demo: need at least 3 checkpoints");
  require(run.records.size() == n_ckpt && run.routers.size() == n_ckpt && run.train_loss.size() == n_ckpt &&
              run.validation_loss.size() == n_ckpt,
          "demo: run artifacts are not aligned with the checkpoint steps");
  require(!run.train_series.empty() && !run.test_series.empty(), "demo: missing loss or held-out series");
  for (const auto& s : run.train_series) require(s.steps == run.steps, "demo: loss series steps differ from checkpoints");
  for (const auto& s : run.test_series) require(s.steps == run.steps, "demo: held-out series steps differ from checkpoints");

  DemoBundle b;
  b.config = config;
  b.steps = run.steps;
  b.norms = run.norms;
  b.train_series = run.train_series;
  b.test_series = run.test_series;
  const auto& train_loss = run.train_loss;

  // Detection and grouping.
  b.calibration = calibrate_epsilon(b.train_series, config.delta, 0.20, 0.25, config.epsilon_grid_step);
  b.epsilon = config.epsilon.value_or(b.calibration.epsilon);
  b.memorization = detect_memorization(b.train_series, {b.epsilon, config.delta});
  {
    std::vector<Detection> det;
    for (const auto& s : b.test_series) det.push_back({s.sample_id, generalization_step(s)});
    b.generalization = group_by_step(det);
  }

  // Per-checkpoint metrics over the whole training set and per group.
  std::vector<SampleRecords> by_sample(n_ckpt);
  for (std::size_t t = 0; t < n_ckpt; ++t) {
    by_sample[t] = group_by_sample(run.records[t]);
    b.routing.insert(b.routing.end(), run.records[t].begin(), run.records[t].end());
  }
  b.routers = run.routers;
  const auto train_ma = moving_average(train_loss, config.moving_average_window);
  for (std::size_t t = 0; t < n_ckpt; ++t) {
    const SubsetSummary s = summarize_subset(by_sample[t], run.routers[t], config.tau);
    CheckpointMetrics m;
    m.step = b.steps[t];
    m.train_loss = train_loss[t];
    m.train_loss_ma = train_ma[t];
    m.validation_loss = run.validation_loss[t];
    double acc = 0.0;
    for (const auto& s_test : run.test_series) acc += s_test.values[t];
    m.heldout_accuracy = acc / static_cast<double>(run.test_series.size());
    m.edit_distance = s.distance;
    m.edit_distance_std = s.distance_std;
    m.distance_pairs = s.pairs;
    m.layer_distance = s.layer_distance;
    m.layer_distance_std = s.layer_distance_std;
    m.smoothness = s.consistency.mean_smoothness;
    m.consistency = s.consistency.mean_c;
    m.entropy = s.entropy;
    b.checkpoints.push_back(m);
  }

  auto trajectory = [&](const DataGroup& g) {
    GroupTrajectory tr;
    tr.key = g.key;
    tr.members = g.members;
    const std::set<std::string> members(g.members.begin(), g.members.end());
    tr.layer_distance.assign(config.model.num_layers, {});
    tr.layer_distance_std.assign(config.model.num_layers, {});
    for (std::size_t t = 0; t < n_ckpt; ++t) {
      const SubsetSummary s = summarize_subset(select_samples(by_sample[t], members), run.routers[t], config.tau);
      tr.distance.push_back(s.distance);
      tr.distance_std.push_back(s.distance_std);
      tr.distance_pairs = s.pairs;
      for (std::size_t l = 0; l < s.layer_distance.size(); ++l) {
        tr.layer_distance[l].push_back(s.layer_distance[l]);
        tr.layer_distance_std[l].push_back(s.layer_distance_std[l]);
      }
      tr.smoothness.push_back(s.consistency.mean_smoothness);
      tr.smoothness_std.push_back(s.consistency.std_smoothness);
      tr.consistency.push_back(s.consistency.mean_c);
      tr.undefined_scores += s.consistency.undefined;
    }
    const std::size_t from = first_index_at_or_after(b.steps, g.key);
    std::vector<double> xs, ys;
    for (std::size_t t = from; t < n_ckpt; ++t) {
      xs.push_back(static_cast<double>(b.steps[t]));
      ys.push_back(tr.distance[t]);
    }
    if (xs.size() >= 3) tr.distance_trend = fit_quadratic(xs, ys);
    if (xs.size() >= 2) tr.distance_slope = linear_slope(xs, ys);
    return tr;
  };
  for (const auto& g : b.memorization.groups)
    if (g.members.size() >= 2) b.groups.push_back(trajectory(g));
  b.earliest_group = earliest_group_index(b.groups, b.steps.front());

  // Signature of the earliest-memorized group.
  if (b.earliest_group) {
    const GroupTrajectory& g = b.groups[*b.earliest_group];
    Signature& sig = b.signature;
    sig.group_key = g.key;
    const std::size_t from = first_index_at_or_after(b.steps, g.key);
    sig.post_points = n_ckpt - from;
    const std::span<const double> dist = std::span<const double>(g.distance).subspan(from);
    const std::span<const double> smooth = std::span<const double>(g.smoothness).subspan(from);
    sig.peak_distance = *std::max_element(dist.begin(), dist.end());
    sig.final_distance = dist.back();
    sig.distance_below_peak = sig.final_distance < sig.peak_distance;
    sig.smoothness_violations = count_decreases(smooth);
    sig.smoothness_violations_first5 = count_decreases(smooth.first(std::min(kFirstWindow, smooth.size())));
    sig.smoothness_non_decreasing = sig.smoothness_violations <= 1;
    std::size_t best_len = 0;
    for (std::size_t a = from; a < n_ckpt; ++a) {
      double lo = train_loss[a], hi = train_loss[a];
      for (std::size_t e = a + 1; e < n_ckpt; ++e) {
        lo = std::min(lo, train_loss[e]);
        hi = std::max(hi, train_loss[e]);
        const double loss_change = (hi - lo) / hi;
        if (loss_change >= kPlateauLossChange) break;
        const double drop = (g.distance[a] - g.distance[e]) / g.distance[a];
        if (drop > kPlateauDistanceDrop && e - a > best_len) {
          best_len = e - a;
          sig.plateau_window = std::make_pair(b.steps[a], b.steps[e]);
          sig.plateau_loss_change = loss_change;
          sig.plateau_distance_drop = drop;
        }
      }
    }
  }

  // Correlation table against held-out accuracy.
  const auto accuracy = column(b.checkpoints, &CheckpointMetrics::heldout_accuracy);
  b.correlation_start = sustained_rise_start(accuracy);
  if (n_ckpt - b.correlation_start < 3) b.correlation_start = n_ckpt >= 3 ? n_ckpt - 3 : 0;
  const std::vector<MetricColumn> metrics{
      {"pathway_edit_distance", "negative", column(b.checkpoints, &CheckpointMetrics::edit_distance)},
      {"raw_smoothness", "positive", column(b.checkpoints, &CheckpointMetrics::smoothness)},
      {"pathway_consistency_C", "negative", column(b.checkpoints, &CheckpointMetrics::consistency)},
      {"training_loss", "negative", column(b.checkpoints, &CheckpointMetrics::train_loss)},
      {"training_loss_moving_average", "negative", column(b.checkpoints, &CheckpointMetrics::train_loss_ma)},
      {"validation_loss", "negative", column(b.checkpoints, &CheckpointMetrics::validation_loss)},
  };
  b.correlations = correlation_table(metrics, accuracy, b.correlation_start, config.permutation_seed);

  // Trend sign of the earliest group under neighbouring thresholds.
  for (double e : {b.epsilon - config.epsilon_grid_step, b.epsilon, b.epsilon + config.epsilon_grid_step}) {
    if (e <= 0.0) continue;
    for (double d : config.robustness_deltas) {
      RobustnessRow row;
      row.epsilon = e;
      row.delta = d;
      const Grouping grouping = detect_memorization(b.train_series, {e, d});
      for (const auto& g : grouping.groups) {
        if (g.members.size() < 2 || g.key <= b.steps.front()) continue;
        const GroupTrajectory tr = trajectory(g);
        row.group_key = g.key;
        row.group_size = g.members.size();
        row.slope = tr.distance_slope;
        row.trend_sign = (tr.distance_slope > 0.0) - (tr.distance_slope < 0.0);
        break;
      }
      b.robustness.push_back(row);
    }
  }

  // Pair memorization groups with generalization groups by content similarity.
  if (!b.memorization.groups.empty() && !b.generalization.groups.empty()) {
    std::unordered_map<std::string, const Sample*> by_id;
    for (const auto& s : run.train) by_id[s.id] = &s;
    for (const auto& s : run.test) by_id[s.id] = &s;
    auto embed = [&](const Grouping& grouping, const char* prefix) {
      std::vector<EmbeddedGroup> out;
      for (const auto& g : grouping.groups) {
        std::vector<Vec> vecs;
        for (const auto& id : g.members) {
          const auto it = by_id.find(id);
          require(it != by_id.end(), "demo: no input vector for sample " + id);
          const Vec& x = it->second->x;
          vecs.push_back(synthetic_embedder(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                                            config.embedding_dim));
        }
        out.push_back(make_embedded_group(prefix + std::to_string(g.key), std::move(vecs)));
      }
      return out;
    };
    const auto train_groups = embed(b.memorization, "Pretrain@");
    const auto test_groups = embed(b.generalization, "Test@");
    b.pair_similarity = group_similarity(train_groups, test_groups);
    b.assignment = hungarian_match(b.pair_similarity);
    for (const auto& [r, c] : b.assignment.pairs) b.pair_labels.push_back(train_groups[r].key + " -> " + test_groups[c].key);
  }

  // Parameter convergence by type.
  b.param_changes = snapshot_param_dynamics(b.norms);
  for (const auto& [type, changes] : b.param_changes)
    if (changes.size() >= 6) b.convergence[type] = convergence_and_stability(changes);
  return b;
}

DemoBundle run_grokking_demo(const DemoConfig& config) { return analyze_demo(config, train_demo_model(config)); }

}  // namespace routelab
