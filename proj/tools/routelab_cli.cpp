// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0
//
// routelab command-line driver. Every subcommand reads and writes the file
// formats documented in README.md, so stages can be replayed independently.
// Exit codes: 0 success, 1 validation error, 2 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "routelab/config.hpp"
#include "routelab/consistency.hpp"
#include "routelab/demo.hpp"
#include "routelab/errors.hpp"
#include "routelab/kernel.hpp"
#include "routelab/pairing.hpp"
#include "routelab/pathway.hpp"
#include "routelab/records_io.hpp"
#include "routelab/report.hpp"
#include "routelab/stats.hpp"
#include "routelab/study.hpp"

namespace fs = std::filesystem;
using namespace routelab;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
};

void add_common(CLI::App* sub, CommonOptions& opts) {
  sub->add_option("-c,--config", opts.config_path, "key=value configuration file");
  sub->add_option("--set", opts.overrides, "override one key (key=value); repeatable");
  sub->add_option("-o,--out", opts.out, "output directory (default: output_dir key or routelab_out)");
}

RunConfig load_config(const CommonOptions& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) cfg = RunConfig::load(opts.config_path);
  cfg.apply_env(config_keys());
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    require(eq != std::string::npos && eq > 0, "--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  const auto unknown = cfg.unknown_keys(config_keys());
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw ValidationError("unknown config keys: " + list);
  }
  return cfg;
}

fs::path output_dir(const CommonOptions& opts, const RunConfig& cfg) {
  fs::path dir = opts.out.empty() ? fs::path(cfg.get_string("output_dir", "routelab_out")) : fs::path(opts.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), "cannot create output directory '" + dir.string() + "'");
  return dir;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open '" + path.string() + "'");
  return in;
}

template <class Fn>
void write_file(const fs::path& path, Fn&& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), "cannot write '" + path.string() + "'");
  body(out);
  out.flush();
  require(static_cast<bool>(out), "write failed for '" + path.string() + "'");
}

// ---- run directory (train output, demo/report input) ----

void write_run(const fs::path& dir, const DemoRun& run) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), "cannot create run directory '" + dir.string() + "'");
  std::vector<std::pair<std::string, Vec>> inputs;
  for (const auto& s : run.train) inputs.emplace_back(s.id, s.x);
  for (const auto& s : run.test) inputs.emplace_back(s.id, s.x);
  write_file(dir / "inputs.txt", [&](std::ostream& o) { write_embeddings(o, inputs); });
  write_file(dir / "routing.jsonl", [&](std::ostream& o) {
    for (const auto& recs : run.records) write_routing_records(o, recs);
  });
  write_file(dir / "routers.csv", [&](std::ostream& o) { write_router_snapshots(o, run.steps, run.routers); });
  write_file(dir / "losses.csv", [&](std::ostream& o) { write_series(o, run.train_series); });
  write_file(dir / "heldout.csv", [&](std::ostream& o) { write_series(o, run.test_series); });
  std::vector<std::size_t> steps(run.steps.begin(), run.steps.end());
  write_file(dir / "norms.csv", [&](std::ostream& o) { write_norm_snapshots(o, steps, run.norms); });
  std::vector<LossRow> rows;
  for (std::size_t t = 0; t < run.steps.size(); ++t) rows.push_back({run.steps[t], run.train_loss[t], run.validation_loss[t]});
  write_file(dir / "loss_summary.csv", [&](std::ostream& o) { write_loss_summary(o, rows); });
}

DemoRun read_run(const fs::path& dir) {
  DemoRun run;
  auto in = open_in(dir / "loss_summary.csv");
  for (const auto& r : read_loss_summary(in)) {
    run.steps.push_back(r.step);
    run.train_loss.push_back(r.train_loss);
    run.validation_loss.push_back(r.validation_loss);
  }
  in = open_in(dir / "losses.csv");
  run.train_series = read_series(in);
  in = open_in(dir / "heldout.csv");
  run.test_series = read_series(in);
  in = open_in(dir / "routers.csv");
  auto [router_steps, routers] = read_router_snapshots(in);
  require(router_steps == run.steps, "routers.csv steps differ from loss_summary.csv");
  run.routers = std::move(routers);
  in = open_in(dir / "norms.csv");
  auto [norm_steps, norms] = read_norm_snapshots(in);
  require(norm_steps == run.steps, "norms.csv steps differ from loss_summary.csv");
  run.norms = std::move(norms);
  in = open_in(dir / "routing.jsonl");
  const auto records = read_routing_records(in);
  std::map<std::int64_t, std::size_t> index;
  for (std::size_t t = 0; t < run.steps.size(); ++t) index[run.steps[t]] = t;
  run.records.assign(run.steps.size(), {});
  for (const auto& r : records) {
    auto it = index.find(r.checkpoint_step);
    require(it != index.end(), "routing record at unknown checkpoint step " + std::to_string(r.checkpoint_step));
    run.records[it->second].push_back(r);
  }
  in = open_in(dir / "inputs.txt");
  std::map<std::string, Vec> inputs;
  for (auto& [id, v] : read_embeddings(in)) inputs[id] = v;
  auto sample_of = [&](const std::string& id) {
    auto it = inputs.find(id);
    require(it != inputs.end(), "inputs.txt has no vector for sample " + id);
    Sample s;
    s.id = id;
    s.x = it->second;
    return s;
  };
  for (const auto& s : run.train_series) run.train.push_back(sample_of(s.sample_id));
  for (const auto& s : run.test_series) run.test.push_back(sample_of(s.sample_id));
  return run;
}

void print_files(const fs::path& dir, const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << (dir / f).string() << '\n';
}

// ---- subcommands ----

int cmd_train(const CommonOptions& opts) {
  const RunConfig cfg = load_config(opts);
  const DemoConfig config = demo_config_from(cfg);
  const fs::path dir = output_dir(opts, cfg);
  const DemoRun run = train_demo_model(config);
  write_run(dir, run);
  std::cout << "checkpoints " << run.steps.size() << ", training samples " << run.train.size() << ", held-out samples "
            << run.test.size() << " -> " << dir.string() << '\n';
  return 0;
}

struct ExtractOptions {
  std::string routing;
  double tau = 0.7;
};

int cmd_extract(const CommonOptions& opts, const ExtractOptions& ex) {
  const RunConfig cfg = load_config(opts);
  const fs::path dir = output_dir(opts, cfg);
  const double tau = cfg.has("tau") ? cfg.get_double("tau", ex.tau) : ex.tau;
  auto in = open_in(ex.routing);
  const auto records = read_routing_records(in);
  std::map<std::int64_t, std::vector<RoutingRecord>> by_step;
  for (const auto& r : records) by_step[r.checkpoint_step].push_back(r);
  write_file(dir / "pathways.csv", [&](std::ostream& o) {
    o << "checkpoint_step,sample_id,pathway,length\n";
    for (const auto& [step, recs] : by_step)
      for (const auto& [id, sample] : group_by_sample(recs)) {
        const Pathway p = extract_pathway(sample, tau);
        o << step << ',' << id << ',' << encode_pathway(p) << ',' << p.tokens().size() << '\n';
      }
  });
  std::cout << (dir / "pathways.csv").string() << '\n';
  return 0;
}

struct MetricsOptions {
  std::string routing;
  std::string routers;
  std::string groups;
  double tau = 0.7;
};

int cmd_metrics(const CommonOptions& opts, const MetricsOptions& mo) {
  const RunConfig cfg = load_config(opts);
  const fs::path dir = output_dir(opts, cfg);
  const double tau = cfg.has("tau") ? cfg.get_double("tau", mo.tau) : mo.tau;
  auto in = open_in(mo.routing);
  const auto records = read_routing_records(in);
  std::map<std::int64_t, std::vector<RoutingRecord>> by_step;
  for (const auto& r : records) by_step[r.checkpoint_step].push_back(r);
  std::map<std::int64_t, std::vector<Mat>> routers;
  if (!mo.routers.empty()) {
    auto rin = open_in(mo.routers);
    auto [steps, mats] = read_router_snapshots(rin);
    for (std::size_t t = 0; t < steps.size(); ++t) routers[steps[t]] = mats[t];
  }
  // Subsets: every sample, then each group of the manifest.
  std::vector<std::pair<std::string, std::set<std::string>>> subsets{{"all", {}}};
  if (!mo.groups.empty()) {
    auto gin = open_in(mo.groups);
    for (const auto& g : read_group_manifest(gin).groups)
      subsets.emplace_back("group@" + std::to_string(g.key), std::set<std::string>(g.members.begin(), g.members.end()));
  }
  std::ofstream dist(dir / "distances.csv", std::ios::binary);
  std::ofstream cons(dir / "consistency.csv", std::ios::binary);
  std::ofstream per(dir / "consistency_samples.csv", std::ios::binary);
  require(dist && cons && per, "cannot write metrics into '" + dir.string() + "'");
  dist << "checkpoint_step,group_id,layer,mean,std,pairs,mean_entropy\n";
  cons << "checkpoint_step,group_id,mean_c,std_c,mean_raw_smoothness,std_raw_smoothness,defined,undefined\n";
  per << "checkpoint_step,sample_id,C_i,raw_smoothness,degenerate,defined\n";
  for (const auto& [step, recs] : by_step) {
    const SampleRecords all = group_by_sample(recs);
    const auto rit = routers.find(step);
    if (rit != routers.end()) {
      for (const auto& [id, sample] : all) {
        const ConsistencyScore s = pathway_consistency(rit->second, sample);
        per << step << ',' << id << ',' << format_double(s.c) << ',' << format_double(s.raw_smoothness) << ','
            << (s.degenerate ? "true" : "false") << ',' << (s.defined ? "true" : "false") << '\n';
      }
    }
    for (const auto& [name, members] : subsets) {
      SampleRecords subset;
      for (const auto& entry : all)
        if (members.empty() || members.count(entry.first)) subset.push_back(entry);
      if (subset.size() < 2) continue;
      std::vector<Pathway> paths;
      double entropy = 0.0;
      for (const auto& [id, sample] : subset) {
        paths.push_back(extract_pathway(sample, tau));
        entropy += routing_entropy(sample);
      }
      entropy /= static_cast<double>(subset.size());
      const auto overall = mean_pairwise_distance(paths);
      dist << step << ',' << name << ",all," << format_double(overall.mean) << ',' << format_double(overall.stddev)
           << ',' << overall.pairs << ',' << format_double(entropy) << '\n';
      for (std::size_t l = 0; l < paths.front().layers.size(); ++l) {
        const auto layer = layerwise_distance(paths, l);
        dist << step << ',' << name << ',' << l << ',' << format_double(layer.mean) << ','
             << format_double(layer.stddev) << ',' << layer.pairs << ',' << format_double(entropy) << '\n';
      }
      if (rit != routers.end()) {
        const GroupConsistency gc = group_consistency(rit->second, subset);
        cons << step << ',' << name << ',' << format_double(gc.mean_c) << ',' << format_double(gc.std_c) << ','
             << format_double(gc.mean_smoothness) << ',' << format_double(gc.std_smoothness) << ',' << gc.defined
             << ',' << gc.undefined << '\n';
      }
    }
  }
  std::cout << (dir / "distances.csv").string() << '\n'
            << (dir / "consistency.csv").string() << '\n'
            << (dir / "consistency_samples.csv").string() << '\n';
  return 0;
}

struct DetectOptions {
  std::string losses;
  std::string heldout;
  double acc_mean_min = 0.8;
  std::size_t max_errors = 1;
};

int cmd_detect(const CommonOptions& opts, const DetectOptions& d) {
  const RunConfig cfg = load_config(opts);
  const fs::path dir = output_dir(opts, cfg);
  auto in = open_in(d.losses);
  const auto losses = read_series(in);
  for (const auto& s : losses) require(s.kind == SeriesKind::kLoss, "detect: --losses must hold loss series");
  const double delta = cfg.get_double("delta", 0.05);
  const auto calibration = calibrate_epsilon(losses, delta, 0.20, 0.25, cfg.get_double("demo.epsilon_grid_step", 0.1));
  const double epsilon = cfg.get_optional_double("epsilon").value_or(calibration.epsilon);
  std::vector<Detection> mem;
  for (const auto& s : losses) mem.push_back({s.sample_id, memorization_step(s, {epsilon, delta})});
  std::vector<Detection> gen;
  if (!d.heldout.empty()) {
    auto hin = open_in(d.heldout);
    for (const auto& s : read_series(hin)) {
      require(s.kind == SeriesKind::kAccuracy, "detect: --heldout must hold accuracy series");
      gen.push_back({s.sample_id, generalization_step(s, d.acc_mean_min, d.max_errors)});
    }
  }
  std::vector<DetectionRow> rows;
  for (const auto& m : mem) rows.push_back({m.sample_id, m.step, std::nullopt});
  for (const auto& g : gen) rows.push_back({g.sample_id, std::nullopt, g.step});
  write_file(dir / "detections.csv", [&](std::ostream& o) { write_detections(o, rows); });
  write_file(dir / "memorization_groups.csv", [&](std::ostream& o) { write_group_manifest(o, group_by_step(mem)); });
  write_file(dir / "generalization_groups.csv", [&](std::ostream& o) { write_group_manifest(o, group_by_step(gen)); });
  std::cout << "epsilon " << format_double(epsilon) << (cfg.has("epsilon") ? " (configured)" : " (calibrated)")
            << ", delta " << format_double(delta) << ", memorized fraction "
            << format_double(memorized_fraction(losses, {epsilon, delta})) << '\n';
  return 0;
}

struct PairOptions {
  std::string embeddings;
  std::string train_groups;
  std::string test_groups;
  std::size_t dim = 16;
  bool raw = false;
};

int cmd_pair(const CommonOptions& opts, const PairOptions& p) {
  const RunConfig cfg = load_config(opts);
  const fs::path dir = output_dir(opts, cfg);
  auto in = open_in(p.embeddings);
  std::map<std::string, Vec> vectors;
  for (auto& [id, v] : read_embeddings(in)) vectors[id] = v;
  auto load_groups = [&](const std::string& path, const std::string& prefix) {
    auto gin = open_in(path);
    std::vector<EmbeddedGroup> out;
    for (const auto& g : read_group_manifest(gin).groups) {
      std::vector<Vec> members;
      for (const auto& id : g.members) {
        auto it = vectors.find(id);
        require(it != vectors.end(), "pair: no embedding for sample " + id);
        const Vec& v = it->second;
        members.push_back(p.raw ? v : synthetic_embedder(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), p.dim));
      }
      out.push_back(make_embedded_group(prefix + std::to_string(g.key), std::move(members)));
    }
    return out;
  };
  const auto train = load_groups(p.train_groups, "Pretrain@");
  const auto test = load_groups(p.test_groups, "Test@");
  require(!train.empty() && !test.empty(), "pair: both group manifests must be nonempty");
  const Mat sim = group_similarity(train, test);
  const Assignment a = hungarian_match(sim);
  write_file(dir / "assignment.csv", [&](std::ostream& o) {
    o << "train_group,test_group,similarity\n";
    for (const auto& [r, c] : a.pairs)
      o << train[r].key << ',' << test[c].key << ','
        << format_double(sim(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))) << '\n';
  });
  std::cout << a.pairs.size() << " pairs, total similarity " << format_double(a.total) << '\n';
  return 0;
}

int cmd_kernel(const CommonOptions& opts) {
  const RunConfig cfg = load_config(opts);
  const StudyConfig sc = study_config_from(cfg);
  const KernelSettings ks = kernel_settings_from(cfg);
  const fs::path dir = output_dir(opts, cfg);
  const ClusterData data = gaussian_clusters(sc.data, sc.num_samples);
  const auto n_train = static_cast<std::size_t>(sc.train_fraction * static_cast<double>(sc.num_samples));
  require(n_train >= 2, "kernel: need at least 2 training samples");
  std::vector<Sample> train(data.samples.begin(), data.samples.begin() + static_cast<std::ptrdiff_t>(n_train));
  MoEConfig mc = sc.model;
  mc.router_frozen = true;
  mc.router_seed = ks.router_seed;
  const MoEModel model = init_model(mc);
  const Mat x = stack_inputs(train);
  const RoutingFeatures f = routing_features(model, x);
  const KernelGram gram = routing_gram(f.gates, expert_gram(f.blocks), 1.0);
  const double lambda = sc.lambda_relative ? sc.lambda * gram.h.trace() / static_cast<double>(n_train) : sc.lambda;
  Vec y(static_cast<Eigen::Index>(n_train));
  for (std::size_t i = 0; i < n_train; ++i) y(static_cast<Eigen::Index>(i)) = train[i].y;
  const BoundReport br = bound_terms(gram.h, y, lambda, ks.sigma, n_train, ks.delta_conf);
  const Vec eig = psd_eigenvalues(gram.h);
  nlohmann::ordered_json j;
  j["router_seed"] = ks.router_seed;
  j["n"] = n_train;
  j["lambda"] = lambda;
  j["lambda_relative"] = sc.lambda_relative;
  j["trace"] = gram.h.trace();
  j["effective_dimension"] = effective_dimension(gram.h, lambda);
  j["bound"] = {{"bias", br.bias},   {"variance", br.variance}, {"noise", br.noise}, {"total", br.total},
                {"c1", br.c1},       {"c2", br.c2},             {"sigma", br.sigma}, {"n", br.n},
                {"delta_conf", br.delta_conf}};
  j["eigenvalues"] = std::vector<double>(eig.data(), eig.data() + eig.size());
  write_file(dir / "kernel.json", [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  std::cout << "effective dimension " << format_double(effective_dimension(gram.h, lambda)) << " at lambda "
            << format_double(lambda) << '\n';
  return 0;
}

int cmd_study(const CommonOptions& opts, const std::string& format) {
  const RunConfig cfg = load_config(opts);
  const StudyConfig sc = study_config_from(cfg);
  const ReportFormat fmt = report_format_from_string(format);
  const fs::path dir = output_dir(opts, cfg);
  const StudyResult result = appendix_b4_study(sc);
  print_files(dir, emit_study_report(sc, result, dir, fmt));
  std::cout << "seeds " << result.points.size() << ", pearson r " << format_double(result.pearson.r) << " (p "
            << format_double(result.pearson.p) << "), spearman " << format_double(result.spearman.r) << '\n';
  return 0;
}

int cmd_demo(const CommonOptions& opts, const std::string& format) {
  const RunConfig cfg = load_config(opts);
  const DemoConfig config = demo_config_from(cfg);
  const ReportFormat fmt = report_format_from_string(format);
  const fs::path dir = output_dir(opts, cfg);
  const DemoRun run = train_demo_model(config);
  write_run(dir / "run", run);
  const DemoBundle bundle = analyze_demo(config, run);
  print_files(dir, emit_report(bundle, dir, fmt));
  return 0;
}

int cmd_report(const CommonOptions& opts, const std::string& run_dir, const std::string& format) {
  const RunConfig cfg = load_config(opts);
  const DemoConfig config = demo_config_from(cfg);
  const ReportFormat fmt = report_format_from_string(format);
  const fs::path dir = output_dir(opts, cfg);
  const DemoBundle bundle = analyze_demo(config, read_run(run_dir));
  print_files(dir, emit_report(bundle, dir, fmt));
  return 0;
}

struct CorrelateOptions {
  std::string table;
  std::string accuracy = "heldout_accuracy";
  std::vector<std::string> metrics;
  int start = -1;
};

int cmd_correlate(const CommonOptions& opts, const CorrelateOptions& co) {
  const RunConfig cfg = load_config(opts);
  const fs::path dir = output_dir(opts, cfg);
  auto in = open_in(co.table);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "correlate: empty table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  std::vector<std::vector<double>> columns(header.size());
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    require(cells.size() == header.size(), "correlate: ragged row in " + co.table);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      RunConfig one;
      one.set(header[c], cells[c]);
      columns[c].push_back(one.get_double(header[c], 0.0));
    }
  }
  auto column_of = [&](const std::string& name) -> const std::vector<double>& {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return columns[c];
    throw ValidationError("correlate: no column named '" + name + "'");
  };
  const auto& accuracy = column_of(co.accuracy);
  std::vector<MetricColumn> metrics;
  for (const auto& spec : co.metrics) {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const std::string expected = colon == std::string::npos ? "negative" : spec.substr(colon + 1);
    metrics.push_back({name, expected, column_of(name)});
  }
  require(!metrics.empty(), "correlate: give at least one --metric name[:positive|negative]");
  const std::size_t start = co.start >= 0 ? static_cast<std::size_t>(co.start) : sustained_rise_start(accuracy);
  const auto rows = correlation_table(metrics, accuracy, start, cfg.get_uint("permutation_seed", 0));
  write_file(dir / "correlations.csv", [&](std::ostream& o) { write_correlation_table(o, rows); });
  std::cout << "start row " << start << ", " << accuracy.size() - start << " points -> "
            << (dir / "correlations.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"routelab: routing-pathway analysis for mixture-of-experts models"};
  app.require_subcommand(1);

  CommonOptions common;
  auto* train = app.add_subcommand("train", "train the demo model and write a run directory");
  add_common(train, common);

  ExtractOptions ex;
  auto* extract = app.add_subcommand("extract", "extract encoded pathways from routing records");
  add_common(extract, common);
  extract->add_option("--routing", ex.routing, "routing records (JSON lines)")->required();
  extract->add_option("--tau", ex.tau, "cumulative routing-weight threshold");

  MetricsOptions mo;
  auto* metrics = app.add_subcommand("metrics", "pathway distance and consistency per checkpoint and group");
  add_common(metrics, common);
  metrics->add_option("--routing", mo.routing, "routing records (JSON lines)")->required();
  metrics->add_option("--routers", mo.routers, "router snapshots CSV (enables consistency)");
  metrics->add_option("--groups", mo.groups, "group manifest CSV");
  metrics->add_option("--tau", mo.tau, "cumulative routing-weight threshold");

  DetectOptions det;
  auto* detect = app.add_subcommand("detect", "memorization and generalization steps with grouping");
  add_common(detect, common);
  detect->add_option("--losses", det.losses, "per-sample loss series CSV")->required();
  detect->add_option("--heldout", det.heldout, "per-sample held-out accuracy series CSV");
  detect->add_option("--acc-mean-min", det.acc_mean_min, "mean accuracy required after the generalization step");
  detect->add_option("--max-errors", det.max_errors, "errors allowed after the generalization step");

  PairOptions po;
  auto* pair = app.add_subcommand("pair", "pair memorization and generalization groups");
  add_common(pair, common);
  pair->add_option("--embeddings", po.embeddings, "per-sample vectors (id v1 v2 ...)")->required();
  pair->add_option("--train-groups", po.train_groups, "memorization group manifest")->required();
  pair->add_option("--test-groups", po.test_groups, "generalization group manifest")->required();
  pair->add_option("--dim", po.dim, "synthetic embedding dimension");
  pair->add_flag("--raw", po.raw, "use the vectors as embeddings directly (normalized)");

  auto* kernel = app.add_subcommand("kernel", "routing Gram matrix, effective dimension and bound terms");
  add_common(kernel, common);

  std::string study_format = "tabular";
  auto* study = app.add_subcommand("study-b4", "cross-seed edit distance vs effective dimension study");
  add_common(study, common);
  study->add_option("--format", study_format, "tabular or structured");

  std::string demo_format = "tabular";
  auto* demo = app.add_subcommand("demo", "synthetic memorization-to-generalization run with full analysis");
  add_common(demo, common);
  demo->add_option("--format", demo_format, "tabular or structured");

  CorrelateOptions co;
  auto* correlate = app.add_subcommand("correlate", "correlation table of metric columns against accuracy");
  add_common(correlate, common);
  correlate->add_option("--table", co.table, "CSV with one row per checkpoint")->required();
  correlate->add_option("--accuracy", co.accuracy, "accuracy column name");
  correlate->add_option("--metric", co.metrics, "metric column, optionally name:positive or name:negative");
  correlate->add_option("--start", co.start, "first row (default: sustained-rise rule)");

  std::string report_run, report_format = "tabular";
  auto* report = app.add_subcommand("report", "analyse a run directory and emit the report");
  add_common(report, common);
  report->add_option("--run", report_run, "run directory written by train or demo")->required();
  report->add_option("--format", report_format, "tabular or structured");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) return cmd_train(common);
    if (*extract) return cmd_extract(common, ex);
    if (*metrics) return cmd_metrics(common, mo);
    if (*detect) return cmd_detect(common, det);
    if (*pair) return cmd_pair(common, po);
    if (*kernel) return cmd_kernel(common);
    if (*study) return cmd_study(common, study_format);
    if (*demo) return cmd_demo(common, demo_format);
    if (*correlate) return cmd_correlate(common, co);
    if (*report) return cmd_report(common, report_run, report_format);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
