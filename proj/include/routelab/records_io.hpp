// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0
//
// File formats shared by every stage. Tabular files are comma-separated with a
// header row; routing records are one JSON object per line:
//
//   {"sample_id":"s07","checkpoint_step":400,"layer":1,"weights":[0.12,0.88]}

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "routelab/dynamics.hpp"
#include "routelab/linalg.hpp"
#include "routelab/moe.hpp"

namespace routelab {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

std::vector<std::string> split_csv_line(const std::string& line);

void write_routing_records(std::ostream& out, std::span<const RoutingRecord> records);
std::vector<RoutingRecord> read_routing_records(std::istream& in);

struct NormRow {
  std::int64_t step = 0;
  ParamType type = ParamType::kExpert;
  double norm = 0.0;
};

/// step,param_type,norm with one row per parameter tensor.
void write_norm_snapshots(std::ostream& out, std::span<const std::size_t> steps, std::span<const ParamNorms> norms);
/// Groups rows back into per-step snapshots (row order within a type is the tensor order).
std::pair<std::vector<std::int64_t>, std::vector<ParamNorms>> read_norm_snapshots(std::istream& in);

/// sample_id,step,value,kind
void write_series(std::ostream& out, std::span<const CheckpointSeries> series);
std::vector<CheckpointSeries> read_series(std::istream& in);

/// sample_id,t_star,t_hash (empty cell when not detected)
struct DetectionRow {
  std::string sample_id;
  std::optional<std::int64_t> t_star;
  std::optional<std::int64_t> t_hash;
};
void write_detections(std::ostream& out, std::span<const DetectionRow> rows);
std::vector<DetectionRow> read_detections(std::istream& in);

/// group_key,sample_id
void write_group_manifest(std::ostream& out, const Grouping& grouping);
Grouping read_group_manifest(std::istream& in);

/// Router matrices per checkpoint in long form: checkpoint_step,layer,expert,component,value.
void write_router_snapshots(std::ostream& out, std::span<const std::int64_t> steps,
                            std::span<const std::vector<Mat>> routers);
std::pair<std::vector<std::int64_t>, std::vector<std::vector<Mat>>> read_router_snapshots(std::istream& in);

/// Aggregate losses per checkpoint: step,train_loss,validation_loss.
struct LossRow {
  std::int64_t step = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};
void write_loss_summary(std::ostream& out, std::span<const LossRow> rows);
std::vector<LossRow> read_loss_summary(std::istream& in);

/// "sample_id f1 f2 ..." one line per sample.
std::vector<std::pair<std::string, Vec>> read_embeddings(std::istream& in);
void write_embeddings(std::ostream& out, std::span<const std::pair<std::string, Vec>> rows);

}  // namespace routelab
