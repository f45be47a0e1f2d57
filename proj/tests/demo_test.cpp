// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "routelab/demo.hpp"
#include "routelab/errors.hpp"
#include "routelab/report.hpp"

using namespace routelab;
namespace fs = std::filesystem;

namespace {

DemoConfig tiny_config() {
  DemoConfig c;
  c.num_train = 24;
  c.num_test = 32;
  c.train.steps = 400;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("routelab_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("sustained rise start matches the suffix-count oracle") {
  CHECK(sustained_rise_start(std::vector<double>{0.1, 0.2, 0.3}) == 0);
  CHECK(sustained_rise_start(std::vector<double>{0.5, 0.1, 0.2, 0.15, 0.3}) == 1);
  CHECK(sustained_rise_start(std::vector<double>{0.9}) == 0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> acc(1 + static_cast<std::size_t>(trial % 15));
    double level = 0.0;
    for (double& v : acc) v = (level += u(rng) - 0.3);
    CHECK(sustained_rise_start(acc) == oracle::sustained_rise_index(acc, 1));
    CHECK(sustained_rise_start(acc, 0) == oracle::sustained_rise_index(acc, 0));
  }
}

TEST_CASE("sustained rise start depends on the history before the rise") {
  const std::vector<double> rise{0.2, 0.3, 0.25, 0.4, 0.5, 0.6};
  const std::size_t base = sustained_rise_start(rise);
  REQUIRE(base == 0);
  // The start extends back into the prepended history up to its last admissible drop.
  std::vector<double> longer{0.5, 0.4, 0.45, 0.1};
  longer.insert(longer.end(), rise.begin(), rise.end());
  CHECK(sustained_rise_start(longer) == 3);
  CHECK(count_decreases(longer) == 3);
  CHECK(count_decreases(std::vector<double>{1, 1, 2}) == 0);
}

TEST_CASE("correlation table directions") {
  const std::vector<double> acc{0.1, 0.3, 0.2, 0.5, 0.7, 0.9};
  std::vector<double> neg;
  for (double a : acc) neg.push_back(-a);
  const std::vector<MetricColumn> metrics{{"same", "positive", acc}, {"opposite", "negative", neg}};
  const auto t = correlation_table(metrics, acc, 1);
  REQUIRE(t.size() == 2);
  CHECK(t[0].pearson.r == doctest::Approx(1.0));
  CHECK(t[0].consistent);
  CHECK(t[0].pearson.n == 5);
  CHECK(t[0].pearson.permutation_p.has_value());
  CHECK(t[1].pearson.r == doctest::Approx(-1.0));
  CHECK(t[1].consistent);
  CHECK_THROWS_AS(correlation_table(metrics, acc, 4), ValidationError);
  const std::vector<MetricColumn> short_metric{{"x", "positive", {1.0, 2.0}}};
  CHECK_THROWS_AS(correlation_table(short_metric, acc, 0), ValidationError);
}

TEST_CASE("demo configuration is validated") {
  DemoConfig c = tiny_config();
  c.model.num_layers = 1;
  CHECK_THROWS_AS(run_grokking_demo(c), ValidationError);
  c = tiny_config();
  c.model.input_dim = 7;
  CHECK_THROWS_AS(run_grokking_demo(c), ValidationError);
  c = tiny_config();
  c.accuracy_tolerance = 0.0;
  CHECK_THROWS_AS(run_grokking_demo(c), ValidationError);
}

TEST_CASE("demo bundle is internally consistent and deterministic") {
  const DemoConfig c = tiny_config();
  const DemoRun run = train_demo_model(c);
  const DemoBundle b = analyze_demo(c, run);
  REQUIRE(b.steps.size() == run.steps.size());
  CHECK(b.checkpoints.size() == b.steps.size());
  CHECK(b.routers.size() == b.steps.size());
  CHECK(b.correlations.size() == 6);
  for (const auto& cp : b.checkpoints) {
    CHECK(cp.heldout_accuracy >= 0.0);
    CHECK(cp.heldout_accuracy <= 1.0);
    CHECK(cp.layer_distance.size() == c.model.num_layers);
    CHECK(cp.distance_pairs == c.num_train * (c.num_train - 1) / 2);
  }
  for (const auto& g : b.groups) CHECK(g.members.size() >= 2);

  const fs::path d1 = scratch("demo_a");
  const fs::path d2 = scratch("demo_b");
  const auto files = emit_report(b, d1, ReportFormat::kTabular);
  emit_report(run_grokking_demo(c), d2, ReportFormat::kTabular);
  for (const auto& f : files) CHECK_MESSAGE(slurp(d1 / f) == slurp(d2 / f), f);

  // Each correlation metric appears exactly once.
  std::istringstream rows(slurp(d1 / "correlations.csv"));
  std::string line;
  std::getline(rows, line);
  std::vector<std::string> names;
  while (std::getline(rows, line)) names.push_back(line.substr(0, line.find(',')));
  CHECK(names.size() == b.correlations.size());
  for (const auto& r : b.correlations) CHECK(std::count(names.begin(), names.end(), r.metric) == 1);

  const fs::path j = scratch("demo_json");
  const auto jfiles = emit_report(b, j, ReportFormat::kStructured);
  CHECK(std::find(jfiles.begin(), jfiles.end(), "report.json") != jfiles.end());
  const std::string again = slurp(j / "report.json");
  emit_report(b, j, ReportFormat::kStructured);
  CHECK(slurp(j / "report.json") == again);
  fs::remove_all(d1);
  fs::remove_all(d2);
  fs::remove_all(j);
}

TEST_CASE("report writers emit header-only tables for empty input") {
  std::ostringstream a;
  write_correlation_table(a, std::span<const CorrelationReport>{});
  CHECK(a.str() ==
        "metric,expected,n,pearson_r,pearson_p,pearson_permutation_p,spearman_r,spearman_p,spearman_permutation_p,"
        "defined,consistent\n");
  std::ostringstream p;
  write_plot_data(p, std::span<const PlotPoint>{});
  CHECK(p.str() == "x,y,series\n");
  std::ostringstream c;
  write_checkpoint_table(c, std::span<const CheckpointMetrics>{});
  const std::string header = c.str();
  CHECK(std::count(header.begin(), header.end(), '\n') == 1);
  CHECK(report_format_from_string("tabular") == ReportFormat::kTabular);
  CHECK(report_format_from_string("structured") == ReportFormat::kStructured);
  CHECK_THROWS_AS(report_format_from_string("xml"), ValidationError);
}

TEST_CASE("report refuses an unwritable destination") {
  const fs::path blocker = scratch("blocker");
  std::ofstream(blocker) << "file";
  const DemoConfig c = tiny_config();
  const DemoBundle b = run_grokking_demo(c);
  CHECK_THROWS_AS(emit_report(b, blocker / "sub", ReportFormat::kTabular), ValidationError);
  fs::remove_all(blocker);
}
