// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "routelab/report.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include <json.hpp>

#include "routelab/errors.hpp"
#include "routelab/records_io.hpp"

namespace routelab {

namespace {

using Json = nlohmann::ordered_json;

const std::string kAllSamples = "all";

std::string group_id(std::int64_t key) { return "group@" + std::to_string(key); }

std::string csv_bool(bool v) { return v ? "true" : "false"; }

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

// Writes `body` into dir/name and records the name.
class FileSink {
 public:
  explicit FileSink(const std::filesystem::path& dir) : dir_(dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
      throw ValidationError("report: cannot create output directory " + dir_.string());
  }

  template <class Fn>
  void write(const std::string& name, Fn&& body) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("report: cannot write " + path.string());
    body(out);
    out.flush();
    if (!out) throw ValidationError("report: write failed for " + path.string());
    written_.push_back(name);
  }

  std::vector<std::string> written() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> written_;
};

Json correlation_json(const Correlation& c) {
  Json j;
  j["defined"] = c.defined;
  j["r"] = c.r;
  j["p"] = c.p;
  j["n"] = c.n;
  j["permutation_p"] = c.permutation_p ? Json(*c.permutation_p) : Json(nullptr);
  return j;
}

Json model_json(const MoEConfig& m) {
  Json j;
  j["num_experts"] = m.num_experts;
  j["input_dim"] = m.input_dim;
  j["hidden_dim"] = m.hidden_dim;
  j["num_layers"] = m.num_layers;
  j["router_frozen"] = m.router_frozen;
  j["seed"] = m.seed;
  j["router_seed"] = m.router_seed ? Json(*m.router_seed) : Json(nullptr);
  j["expert_kind"] = m.expert_kind == ExpertKind::kLinear ? "linear" : "relu_mlp";
  j["router_init_scale"] = m.router_init_scale;
  j["expert_init_scale"] = m.expert_init_scale;
  return j;
}

Json data_json(const ClusterSpec& d) {
  Json j;
  j["num_clusters"] = d.num_clusters;
  j["dim"] = d.dim;
  j["radius"] = d.radius;
  j["stddev"] = d.stddev;
  j["offset"] = d.offset;
  j["seed"] = d.seed;
  return j;
}

Json demo_config_json(const DemoConfig& c) {
  Json j;
  j["model"] = model_json(c.model);
  j["data"] = data_json(c.data);
  j["num_train"] = c.num_train;
  j["num_test"] = c.num_test;
  Json t;
  t["learning_rate"] = c.train.learning_rate;
  t["steps"] = c.train.steps;
  t["ridge"] = c.train.ridge ? Json(*c.train.ridge) : Json(nullptr);
  t["weight_decay"] = c.train.weight_decay;
  t["router_weight_decay"] = c.train.router_weight_decay ? Json(*c.train.router_weight_decay) : Json(nullptr);
  t["router_lr_scale"] = c.train.router_lr_scale;
  t["checkpoint_interval"] = c.train.checkpoint_interval;
  t["halve_on_increase"] = c.train.halve_on_increase;
  j["train"] = t;
  j["tau"] = c.tau;
  j["epsilon"] = c.epsilon ? Json(*c.epsilon) : Json(nullptr);
  j["delta"] = c.delta;
  j["epsilon_grid_step"] = c.epsilon_grid_step;
  j["robustness_deltas"] = c.robustness_deltas;
  j["accuracy_tolerance"] = c.accuracy_tolerance;
  j["moving_average_window"] = c.moving_average_window;
  j["embedding_dim"] = c.embedding_dim;
  j["permutation_seed"] = c.permutation_seed;
  return j;
}

std::vector<DetectionRow> detection_rows(const DemoBundle& b) {
  std::map<std::string, std::int64_t> t_star, t_hash;
  for (const auto& g : b.memorization.groups)
    for (const auto& id : g.members) t_star[id] = g.key;
  for (const auto& g : b.generalization.groups)
    for (const auto& id : g.members) t_hash[id] = g.key;
  std::vector<DetectionRow> rows;
  auto add = [&](const std::vector<CheckpointSeries>& series) {
    for (const auto& s : series) {
      DetectionRow r;
      r.sample_id = s.sample_id;
      if (auto it = t_star.find(s.sample_id); it != t_star.end()) r.t_star = it->second;
      if (auto it = t_hash.find(s.sample_id); it != t_hash.end()) r.t_hash = it->second;
      rows.push_back(std::move(r));
    }
  };
  add(b.train_series);
  add(b.test_series);
  return rows;
}

// Mean of the member series at every checkpoint.
std::vector<double> member_mean(const std::vector<CheckpointSeries>& series, const std::vector<std::string>& members,
                                std::size_t n_ckpt) {
  std::map<std::string, const CheckpointSeries*> by_id;
  for (const auto& s : series) by_id[s.sample_id] = &s;
  std::vector<double> mean(n_ckpt, 0.0);
  std::size_t count = 0;
  for (const auto& id : members) {
    auto it = by_id.find(id);
    if (it == by_id.end()) continue;
    for (std::size_t t = 0; t < n_ckpt; ++t) mean[t] += it->second->values[t];
    ++count;
  }
  if (count > 0)
    for (double& v : mean) v /= static_cast<double>(count);
  return mean;
}

std::optional<std::int64_t> key_from_label(const std::string& label) {
  const auto at = label.find('@');
  if (at == std::string::npos) return std::nullopt;
  return std::stoll(label.substr(at + 1));
}

const DataGroup* find_group(const Grouping& grouping, std::int64_t key) {
  for (const auto& g : grouping.groups)
    if (g.key == key) return &g;
  return nullptr;
}

// Plot-data builders; the step axis is the checkpoint step.
std::vector<PlotPoint> memorization_count_plot(const DemoBundle& b) {
  std::vector<PlotPoint> pts;
  auto cumulative = [&](const Grouping& grouping, const std::string& series) {
    std::size_t g = 0, count = 0;
    for (std::int64_t step : b.steps) {
      while (g < grouping.groups.size() && grouping.groups[g].key <= step) count += grouping.groups[g++].members.size();
      pts.push_back({static_cast<double>(step), static_cast<double>(count), series});
    }
  };
  cumulative(b.memorization, "memorized_samples");
  cumulative(b.generalization, "generalized_samples");
  for (const auto& m : b.checkpoints) pts.push_back({static_cast<double>(m.step), m.heldout_accuracy, "heldout_accuracy"});
  return pts;
}

std::vector<PlotPoint> paired_groups_plot(const DemoBundle& b) {
  std::vector<PlotPoint> pts;
  for (std::size_t p = 0; p < b.pair_labels.size(); ++p) {
    const std::string& label = b.pair_labels[p];
    const auto arrow = label.find(" -> ");
    const std::string train_label = label.substr(0, arrow);
    const std::string test_label = label.substr(arrow + 4);
    const auto train_key = key_from_label(train_label);
    const auto test_key = key_from_label(test_label);
    const DataGroup* tg = train_key ? find_group(b.memorization, *train_key) : nullptr;
    const DataGroup* vg = test_key ? find_group(b.generalization, *test_key) : nullptr;
    if (tg == nullptr || vg == nullptr) continue;
    const auto loss = member_mean(b.train_series, tg->members, b.steps.size());
    const auto acc = member_mean(b.test_series, vg->members, b.steps.size());
    for (std::size_t t = 0; t < b.steps.size(); ++t)
      pts.push_back({static_cast<double>(b.steps[t]), loss[t], train_label + " training_loss"});
    for (std::size_t t = 0; t < b.steps.size(); ++t)
      pts.push_back({static_cast<double>(b.steps[t]), acc[t], test_label + " accuracy"});
  }
  return pts;
}

std::vector<PlotPoint> edit_distance_plot(const DemoBundle& b) {
  std::vector<PlotPoint> pts;
  for (const auto& m : b.checkpoints) pts.push_back({static_cast<double>(m.step), m.edit_distance, kAllSamples});
  for (const auto& g : b.groups) {
    const std::string id = group_id(g.key);
    for (std::size_t t = 0; t < b.steps.size(); ++t)
      pts.push_back({static_cast<double>(b.steps[t]), g.distance[t], id});
    for (std::int64_t step : b.steps)
      if (step >= g.key)
        pts.push_back({static_cast<double>(step), g.distance_trend.evaluate(static_cast<double>(step)), id + " trend"});
  }
  for (const auto& m : b.checkpoints) pts.push_back({static_cast<double>(m.step), m.train_loss, "training_loss"});
  return pts;
}

std::vector<PlotPoint> layer_distance_plot(const DemoBundle& b) {
  std::vector<PlotPoint> pts;
  if (b.earliest_group) {
    const GroupTrajectory& g = b.groups[*b.earliest_group];
    for (std::size_t l = 0; l < g.layer_distance.size(); ++l)
      for (std::size_t t = 0; t < b.steps.size(); ++t)
        pts.push_back({static_cast<double>(b.steps[t]), g.layer_distance[l][t],
                       group_id(g.key) + " layer " + std::to_string(l)});
  }
  if (!b.checkpoints.empty())
    for (std::size_t l = 0; l < b.checkpoints.front().layer_distance.size(); ++l)
      for (const auto& m : b.checkpoints)
        pts.push_back({static_cast<double>(m.step), m.layer_distance[l], kAllSamples + " layer " + std::to_string(l)});
  return pts;
}

std::vector<PlotPoint> consistency_plot(const DemoBundle& b) {
  std::vector<PlotPoint> pts;
  for (const auto& m : b.checkpoints)
    pts.push_back({static_cast<double>(m.step), m.smoothness, kAllSamples + " raw_smoothness"});
  for (const auto& g : b.groups)
    for (std::size_t t = 0; t < b.steps.size(); ++t)
      pts.push_back({static_cast<double>(b.steps[t]), g.smoothness[t], group_id(g.key) + " raw_smoothness"});
  for (const auto& m : b.checkpoints) pts.push_back({static_cast<double>(m.step), m.train_loss, "training_loss"});
  return pts;
}

std::vector<PlotPoint> correlation_plot(std::span<const CorrelationReport> rows) {
  std::vector<PlotPoint> pts;
  for (const auto& r : rows) {
    pts.push_back({0.0, r.pearson.r, r.metric + " pearson"});
    pts.push_back({1.0, r.spearman.r, r.metric + " spearman"});
  }
  return pts;
}

std::vector<PlotPoint> study_plot(const StudyResult& result) {
  std::vector<PlotPoint> pts;
  for (const auto& p : result.points) pts.push_back({p.normalized_distance, p.normalized_dimension, "normalized"});
  for (const auto& p : result.points) pts.push_back({p.mean_edit_distance, p.effective_dimension, "raw"});
  return pts;
}

void write_plot_files(FileSink& sink, const DemoBundle& b) {
  auto emit = [&](const std::string& name, const std::vector<PlotPoint>& pts) {
    sink.write(name, [&](std::ostream& out) { write_plot_data(out, pts); });
  };
  emit("plot_memorization_count.csv", memorization_count_plot(b));
  emit("plot_paired_groups.csv", paired_groups_plot(b));
  emit("plot_edit_distance.csv", edit_distance_plot(b));
  emit("plot_layer_distance.csv", layer_distance_plot(b));
  emit("plot_consistency.csv", consistency_plot(b));
  emit("plot_correlation.csv", correlation_plot(b.correlations));
}

void write_distance_table(std::ostream& out, const DemoBundle& b) {
  out << "checkpoint_step,group_id,layer,mean,std,pairs\n";
  for (const auto& m : b.checkpoints) {
    out << m.step << ',' << kAllSamples << ",all," << format_double(m.edit_distance) << ','
        << format_double(m.edit_distance_std) << ',' << m.distance_pairs << '\n';
    for (std::size_t l = 0; l < m.layer_distance.size(); ++l)
      out << m.step << ',' << kAllSamples << ',' << l << ',' << format_double(m.layer_distance[l]) << ','
          << format_double(m.layer_distance_std[l]) << ',' << m.distance_pairs << '\n';
  }
  for (const auto& g : b.groups) {
    const std::string id = group_id(g.key);
    for (std::size_t t = 0; t < b.steps.size(); ++t) {
      out << b.steps[t] << ',' << id << ",all," << format_double(g.distance[t]) << ','
          << format_double(g.distance_std[t]) << ',' << g.distance_pairs << '\n';
      for (std::size_t l = 0; l < g.layer_distance.size(); ++l)
        out << b.steps[t] << ',' << id << ',' << l << ',' << format_double(g.layer_distance[l][t]) << ','
            << format_double(g.layer_distance_std[l][t]) << ',' << g.distance_pairs << '\n';
    }
  }
}

void write_consistency_table(std::ostream& out, const DemoBundle& b) {
  out << "checkpoint_step,group_id,mean_raw_smoothness,std_raw_smoothness,mean_c\n";
  for (const auto& m : b.checkpoints)
    out << m.step << ',' << kAllSamples << ',' << format_double(m.smoothness) << ",," << format_double(m.consistency)
        << '\n';
  for (const auto& g : b.groups)
    for (std::size_t t = 0; t < b.steps.size(); ++t)
      out << b.steps[t] << ',' << group_id(g.key) << ',' << format_double(g.smoothness[t]) << ','
          << format_double(g.smoothness_std[t]) << ',' << format_double(g.consistency[t]) << '\n';
}

void write_groups_table(std::ostream& out, const DemoBundle& b) {
  out << "kind,group_key,sample_id\n";
  for (const auto& [kind, grouping] : {std::pair{"memorization", &b.memorization}, {"generalization", &b.generalization}})
    for (const auto& g : grouping->groups)
      for (const auto& id : g.members) out << kind << ',' << g.key << ',' << id << '\n';
}

void write_trend_table(std::ostream& out, const DemoBundle& b) {
  out << "group_id,group_size,undefined_scores,quadratic_a,quadratic_b,quadratic_c,linear_slope\n";
  for (const auto& g : b.groups)
    out << group_id(g.key) << ',' << g.members.size() << ',' << g.undefined_scores << ','
        << format_double(g.distance_trend.a) << ',' << format_double(g.distance_trend.b) << ','
        << format_double(g.distance_trend.c) << ',' << format_double(g.distance_slope) << '\n';
}

void write_robustness_table(std::ostream& out, const DemoBundle& b) {
  out << "epsilon,delta,group_key,group_size,slope,trend_sign\n";
  for (const auto& r : b.robustness)
    out << format_double(r.epsilon) << ',' << format_double(r.delta) << ','
        << (r.group_key ? std::to_string(*r.group_key) : std::string()) << ',' << r.group_size << ','
        << format_double(r.slope) << ',' << r.trend_sign << '\n';
}

void write_assignment_table(std::ostream& out, const DemoBundle& b) {
  out << "pair,similarity\n";
  for (std::size_t p = 0; p < b.assignment.pairs.size(); ++p) {
    const auto [r, c] = b.assignment.pairs[p];
    out << b.pair_labels[p] << ',' << format_double(b.pair_similarity(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)))
        << '\n';
  }
}

void write_convergence_table(std::ostream& out, const DemoBundle& b) {
  out << "param_type,speed,stability,stability_capped\n";
  for (const auto& [type, cs] : b.convergence)
    out << to_string(type) << ',' << format_double(cs.speed) << ',' << format_double(cs.stability) << ','
        << csv_bool(cs.stability_capped) << '\n';
}

Json signature_json(const DemoBundle& b) {
  Json j;
  const Signature& s = b.signature;
  j["defined"] = b.earliest_group.has_value();
  j["group_key"] = s.group_key;
  j["post_points"] = s.post_points;
  j["peak_distance"] = s.peak_distance;
  j["final_distance"] = s.final_distance;
  j["distance_below_peak"] = s.distance_below_peak;
  j["smoothness_violations"] = s.smoothness_violations;
  j["smoothness_violations_first5"] = s.smoothness_violations_first5;
  j["smoothness_non_decreasing"] = s.smoothness_non_decreasing;
  if (s.plateau_window) {
    j["plateau_window"] = {s.plateau_window->first, s.plateau_window->second};
  } else {
    j["plateau_window"] = nullptr;
  }
  j["plateau_loss_change"] = s.plateau_loss_change;
  j["plateau_distance_drop"] = s.plateau_distance_drop;
  return j;
}

void write_signature_table(std::ostream& out, const DemoBundle& b) {
  out << "field,value\n";
  const Json sig = signature_json(b);
  for (const auto& [key, value] : sig.items()) out << key << ',' << value.dump() << '\n';
}

Json grouping_json(const Grouping& g) {
  Json j;
  j["undetected"] = g.undetected;
  j["groups"] = Json::array();
  for (const auto& grp : g.groups) j["groups"].push_back({{"key", grp.key}, {"members", grp.members}});
  return j;
}

Json demo_json(const DemoBundle& b) {
  Json j;
  j["kind"] = "demo";
  j["config"] = demo_config_json(b.config);
  j["steps"] = b.steps;
  j["epsilon"] = b.epsilon;
  j["calibration"] = {{"epsilon", b.calibration.epsilon},
                      {"fraction", b.calibration.fraction},
                      {"in_band", b.calibration.in_band}};
  Json ckpts = Json::array();
  for (const auto& m : b.checkpoints) {
    Json c;
    c["step"] = m.step;
    c["train_loss"] = m.train_loss;
    c["train_loss_ma"] = m.train_loss_ma;
    c["validation_loss"] = m.validation_loss;
    c["heldout_accuracy"] = m.heldout_accuracy;
    c["edit_distance"] = m.edit_distance;
    c["edit_distance_std"] = m.edit_distance_std;
    c["distance_pairs"] = m.distance_pairs;
    c["layer_distance"] = m.layer_distance;
    c["layer_distance_std"] = m.layer_distance_std;
    c["raw_smoothness"] = m.smoothness;
    c["consistency_c"] = m.consistency;
    c["entropy"] = m.entropy;
    ckpts.push_back(c);
  }
  j["checkpoints"] = ckpts;
  j["memorization"] = grouping_json(b.memorization);
  j["generalization"] = grouping_json(b.generalization);
  Json groups = Json::array();
  for (const auto& g : b.groups) {
    Json gj;
    gj["id"] = group_id(g.key);
    gj["key"] = g.key;
    gj["members"] = g.members;
    gj["distance"] = g.distance;
    gj["distance_std"] = g.distance_std;
    gj["distance_pairs"] = g.distance_pairs;
    gj["layer_distance"] = g.layer_distance;
    gj["layer_distance_std"] = g.layer_distance_std;
    gj["raw_smoothness"] = g.smoothness;
    gj["raw_smoothness_std"] = g.smoothness_std;
    gj["consistency_c"] = g.consistency;
    gj["undefined_scores"] = g.undefined_scores;
    gj["trend"] = {{"a", g.distance_trend.a}, {"b", g.distance_trend.b}, {"c", g.distance_trend.c}};
    gj["linear_slope"] = g.distance_slope;
    groups.push_back(gj);
  }
  j["groups"] = groups;
  j["earliest_group"] = b.earliest_group ? Json(group_id(b.groups[*b.earliest_group].key)) : Json(nullptr);
  j["signature"] = signature_json(b);
  j["correlation_start_step"] = b.steps.empty() ? Json(nullptr) : Json(b.steps[b.correlation_start]);
  Json corr = Json::array();
  for (const auto& r : b.correlations)
    corr.push_back({{"metric", r.metric},
                    {"expected", r.expected},
                    {"pearson", correlation_json(r.pearson)},
                    {"spearman", correlation_json(r.spearman)},
                    {"consistent", r.consistent}});
  j["correlations"] = corr;
  Json rob = Json::array();
  for (const auto& r : b.robustness)
    rob.push_back({{"epsilon", r.epsilon},
                   {"delta", r.delta},
                   {"group_key", r.group_key ? Json(*r.group_key) : Json(nullptr)},
                   {"group_size", r.group_size},
                   {"slope", r.slope},
                   {"trend_sign", r.trend_sign}});
  j["robustness"] = rob;
  Json pairs = Json::array();
  for (std::size_t p = 0; p < b.assignment.pairs.size(); ++p) {
    const auto [r, c] = b.assignment.pairs[p];
    pairs.push_back({{"pair", b.pair_labels[p]},
                     {"similarity", b.pair_similarity(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))}});
  }
  j["pairing"] = {{"total_similarity", b.assignment.total}, {"pairs", pairs}};
  Json conv = Json::object();
  for (const auto& [type, cs] : b.convergence)
    conv[to_string(type)] = {{"speed", cs.speed}, {"stability", cs.stability}, {"stability_capped", cs.stability_capped}};
  j["convergence"] = conv;
  Json changes = Json::object();
  for (const auto& [type, values] : b.param_changes) changes[to_string(type)] = values;
  j["param_changes"] = changes;
  return j;
}

Json study_json(const StudyConfig& config, const StudyResult& result) {
  Json j;
  j["kind"] = "study";
  Json c;
  c["model"] = model_json(config.model);
  c["data"] = data_json(config.data);
  c["num_samples"] = config.num_samples;
  c["train_fraction"] = config.train_fraction;
  c["num_seeds"] = config.num_seeds;
  c["first_router_seed"] = config.first_router_seed;
  c["tau"] = config.tau;
  c["lambda"] = config.lambda;
  c["lambda_relative"] = config.lambda_relative;
  c["train_steps"] = config.train_steps;
  c["learning_rate"] = config.learning_rate;
  j["config"] = c;
  j["train_size"] = result.train_size;
  j["pairs_per_seed"] = result.pairs_per_seed;
  Json pts = Json::array();
  for (const auto& p : result.points)
    pts.push_back({{"router_seed", p.router_seed},
                   {"mean_edit_distance", p.mean_edit_distance},
                   {"edit_distance_std", p.edit_distance_std},
                   {"effective_dimension", p.effective_dimension},
                   {"lambda", p.lambda},
                   {"normalized_distance", p.normalized_distance},
                   {"normalized_dimension", p.normalized_dimension},
                   {"mean_entropy", p.mean_entropy},
                   {"train_loss", p.train_loss},
                   {"validation_loss", p.validation_loss}});
  j["points"] = pts;
  j["pearson"] = correlation_json(result.pearson);
  j["spearman"] = correlation_json(result.spearman);
  return j;
}

}  // namespace

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "tabular") return ReportFormat::kTabular;
  if (name == "structured") return ReportFormat::kStructured;
  throw ValidationError("unknown report format: " + name + " (expected tabular or structured)");
}

void write_plot_data(std::ostream& out, std::span<const PlotPoint> points) {
  out << "x,y,series\n";
  for (const auto& p : points) {
    require(p.series.find_first_of(",\n") == std::string::npos, "plot data: series label contains a delimiter");
    out << format_double(p.x) << ',' << format_double(p.y) << ',' << p.series << '\n';
  }
}

void write_correlation_table(std::ostream& out, std::span<const CorrelationReport> rows) {
  out << "metric,expected,n,pearson_r,pearson_p,pearson_permutation_p,spearman_r,spearman_p,spearman_permutation_p,"
         "defined,consistent\n";
  for (const auto& r : rows)
    out << r.metric << ',' << r.expected << ',' << r.pearson.n << ',' << format_double(r.pearson.r) << ','
        << format_double(r.pearson.p) << ',' << opt_double(r.pearson.permutation_p) << ','
        << format_double(r.spearman.r) << ',' << format_double(r.spearman.p) << ','
        << opt_double(r.spearman.permutation_p) << ',' << csv_bool(r.pearson.defined && r.spearman.defined) << ','
        << csv_bool(r.consistent) << '\n';
}

void write_checkpoint_table(std::ostream& out, std::span<const CheckpointMetrics> rows) {
  out << "step,train_loss,train_loss_ma,validation_loss,heldout_accuracy,edit_distance,raw_smoothness,consistency_c,"
         "entropy\n";
  for (const auto& m : rows)
    out << m.step << ',' << format_double(m.train_loss) << ',' << format_double(m.train_loss_ma) << ','
        << format_double(m.validation_loss) << ',' << format_double(m.heldout_accuracy) << ','
        << format_double(m.edit_distance) << ',' << format_double(m.smoothness) << ','
        << format_double(m.consistency) << ',' << format_double(m.entropy) << '\n';
}

void write_study_table(std::ostream& out, const StudyResult& result) {
  out << "seed,mean_edit_distance,effective_dimension,edit_distance_std,lambda,normalized_distance,"
         "normalized_dimension,mean_entropy,train_loss,validation_loss\n";
  for (const auto& p : result.points)
    out << p.router_seed << ',' << format_double(p.mean_edit_distance) << ',' << format_double(p.effective_dimension)
        << ',' << format_double(p.edit_distance_std) << ',' << format_double(p.lambda) << ','
        << format_double(p.normalized_distance) << ',' << format_double(p.normalized_dimension) << ','
        << format_double(p.mean_entropy) << ',' << format_double(p.train_loss) << ','
        << format_double(p.validation_loss) << '\n';
}

void write_study_summary(std::ostream& out, const StudyResult& result) {
  out << "r,p,n_seeds,spearman_rho,spearman_p\n";
  out << format_double(result.pearson.r) << ',' << format_double(result.pearson.p) << ',' << result.points.size()
      << ',' << format_double(result.spearman.r) << ',' << format_double(result.spearman.p) << '\n';
}

std::vector<std::string> emit_report(const DemoBundle& bundle, const std::filesystem::path& dir, ReportFormat format) {
  FileSink sink(dir);
  if (format == ReportFormat::kTabular) {
    sink.write("checkpoints.csv", [&](std::ostream& o) { write_checkpoint_table(o, bundle.checkpoints); });
    sink.write("correlations.csv", [&](std::ostream& o) { write_correlation_table(o, bundle.correlations); });
    sink.write("distances.csv", [&](std::ostream& o) { write_distance_table(o, bundle); });
    sink.write("consistency.csv", [&](std::ostream& o) { write_consistency_table(o, bundle); });
    sink.write("trends.csv", [&](std::ostream& o) { write_trend_table(o, bundle); });
    sink.write("signature.csv", [&](std::ostream& o) { write_signature_table(o, bundle); });
    sink.write("detections.csv", [&](std::ostream& o) { write_detections(o, detection_rows(bundle)); });
    sink.write("groups.csv", [&](std::ostream& o) { write_groups_table(o, bundle); });
    sink.write("robustness.csv", [&](std::ostream& o) { write_robustness_table(o, bundle); });
    sink.write("assignment.csv", [&](std::ostream& o) { write_assignment_table(o, bundle); });
    sink.write("convergence.csv", [&](std::ostream& o) { write_convergence_table(o, bundle); });
  } else {
    sink.write("report.json", [&](std::ostream& o) { o << demo_json(bundle).dump(2) << '\n'; });
  }
  write_plot_files(sink, bundle);
  return sink.written();
}

std::vector<std::string> emit_study_report(const StudyConfig& config, const StudyResult& result,
                                           const std::filesystem::path& dir, ReportFormat format) {
  FileSink sink(dir);
  if (format == ReportFormat::kTabular) {
    sink.write("study.csv", [&](std::ostream& o) { write_study_table(o, result); });
    sink.write("study_summary.csv", [&](std::ostream& o) { write_study_summary(o, result); });
  } else {
    sink.write("study.json", [&](std::ostream& o) { o << study_json(config, result).dump(2) << '\n'; });
  }
  sink.write("plot_study.csv", [&](std::ostream& o) { write_plot_data(o, study_plot(result)); });
  return sink.written();
}

}  // namespace routelab
