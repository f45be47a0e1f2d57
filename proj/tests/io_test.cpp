// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "routelab/config.hpp"
#include "routelab/errors.hpp"
#include "routelab/records_io.hpp"

using namespace routelab;

TEST_CASE("format_double round-trips") {
  for (double v : {0.0, -1.5, 0.1, 1.0 / 3.0, 1e-300, 123456789.125, std::numeric_limits<double>::max()})
    CHECK(std::stod(format_double(v)) == v);
  CHECK(split_csv_line("a,,b") == std::vector<std::string>{"a", "", "b"});
}

TEST_CASE("routing records round-trip through JSON lines") {
  std::vector<RoutingRecord> recs{{"s1", 0, 0, {0.25, 0.75}}, {"s\"2", 400, 2, {1.0 / 3.0, 2.0 / 3.0}}};
  std::stringstream buf;
  write_routing_records(buf, recs);
  const auto back = read_routing_records(buf);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].sample_id == recs[i].sample_id);
    CHECK(back[i].checkpoint_step == recs[i].checkpoint_step);
    CHECK(back[i].layer == recs[i].layer);
    CHECK(back[i].weights == recs[i].weights);
  }
  std::stringstream bad("{\"sample_id\":\"a\",\"checkpoint_step\":0,\"layer\":0}\n");
  CHECK_THROWS_AS(read_routing_records(bad), ValidationError);
  std::stringstream junk("not json\n");
  CHECK_THROWS_AS(read_routing_records(junk), ValidationError);
}

TEST_CASE("series, detections and groups round-trip") {
  CheckpointSeries a{"a", {0, 10, 20}, {1.5, 0.2, 0.1}, SeriesKind::kLoss};
  CheckpointSeries b{"b", {0, 10}, {0.0, 1.0}, SeriesKind::kAccuracy};
  std::stringstream s;
  write_series(s, std::vector<CheckpointSeries>{a, b});
  const auto back = read_series(s);
  REQUIRE(back.size() == 2);
  CHECK(back[0].values == a.values);
  CHECK(back[1].kind == SeriesKind::kAccuracy);

  std::vector<DetectionRow> rows{{"a", 10, std::nullopt}, {"b", std::nullopt, 20}};
  std::stringstream d;
  write_detections(d, rows);
  const auto dr = read_detections(d);
  REQUIRE(dr.size() == 2);
  CHECK(dr[0].t_star == 10);
  CHECK(!dr[0].t_hash);
  CHECK(dr[1].t_hash == 20);

  Grouping g;
  g.groups = {{10, {"a", "c"}}, {30, {"b"}}};
  std::stringstream gm;
  write_group_manifest(gm, g);
  const Grouping gb = read_group_manifest(gm);
  REQUIRE(gb.groups.size() == 2);
  CHECK(gb.groups[0].members == std::vector<std::string>{"a", "c"});
  CHECK(gb.groups[1].key == 30);
}

TEST_CASE("router snapshots, norms, losses and embeddings round-trip") {
  Mat w(2, 3);
  w << 1, 2, 3, 4, 5, 0.125;
  const std::vector<std::int64_t> steps{0, 50};
  const std::vector<std::vector<Mat>> routers{{w, 2 * w}, {-w, w}};
  std::stringstream r;
  write_router_snapshots(r, steps, routers);
  const auto [rs, rm] = read_router_snapshots(r);
  CHECK(rs == steps);
  REQUIRE(rm.size() == 2);
  CHECK(rm[1][0] == -w);
  CHECK(rm[0][1] == 2 * w);

  const std::vector<std::size_t> nsteps{0, 5};
  const std::vector<ParamNorms> norms{{{ParamType::kRouter, {1.0}}, {ParamType::kExpert, {2.0, 3.0}}},
                                      {{ParamType::kRouter, {1.5}}, {ParamType::kExpert, {2.5, 3.5}}}};
  std::stringstream n;
  write_norm_snapshots(n, nsteps, norms);
  const auto [ns, nb] = read_norm_snapshots(n);
  CHECK(ns == std::vector<std::int64_t>{0, 5});
  CHECK(nb[1].at(ParamType::kExpert) == std::vector<double>{2.5, 3.5});

  const std::vector<LossRow> losses{{0, 2.0, 3.0}, {10, 0.5, 1.25}};
  std::stringstream l;
  write_loss_summary(l, losses);
  const auto lb = read_loss_summary(l);
  REQUIRE(lb.size() == 2);
  CHECK(lb[1].validation_loss == 1.25);

  const std::vector<std::pair<std::string, Vec>> emb{{"x", Vec::LinSpaced(3, 0.1, 0.3)}};
  std::stringstream e;
  write_embeddings(e, emb);
  const auto eb = read_embeddings(e);
  REQUIRE(eb.size() == 1);
  CHECK(eb[0].second == emb[0].second);

  std::stringstream wrong("step,wrong,header\n");
  CHECK_THROWS_AS(read_loss_summary(wrong), ValidationError);
}

TEST_CASE("config parsing, overrides and unknown keys") {
  std::stringstream in("# comment\nmodel.num_experts = 6\n\ntrain.steps=120\nlambda=0.2\n");
  RunConfig cfg = RunConfig::parse(in);
  CHECK(cfg.get_int("model.num_experts", 0) == 6);
  CHECK(cfg.get_double("missing", 1.5) == 1.5);
  CHECK(cfg.unknown_keys(config_keys()).empty());

  CHECK(env_name("model.num_experts") == "ROUTELAB_MODEL_NUM_EXPERTS");
  ::setenv("ROUTELAB_TRAIN_STEPS", "77", 1);
  cfg.apply_env(config_keys());
  ::unsetenv("ROUTELAB_TRAIN_STEPS");
  CHECK(cfg.get_int("train.steps", 0) == 77);

  const DemoConfig demo = demo_config_from(cfg);
  CHECK(demo.model.num_experts == 6);
  CHECK(demo.train.steps == 77);
  const StudyConfig study = study_config_from(cfg);
  CHECK(study.lambda == 0.2);

  cfg.set("model.num_expert", "3");
  CHECK(cfg.unknown_keys(config_keys()) == std::vector<std::string>{"model.num_expert"});

  cfg.set("train.steps", "many");
  CHECK_THROWS_AS(demo_config_from(cfg), ValidationError);
  std::stringstream broken("no equals sign\n");
  CHECK_THROWS_AS(RunConfig::parse(broken), ValidationError);
}
