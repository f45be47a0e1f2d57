// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "routelab/records_io.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "routelab/errors.hpp"

namespace routelab {

namespace {

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    require(used == s.size(), what + ": trailing characters in '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ValidationError(what + ": not a number '" + s + "'");
  }
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(), what + ": not an integer '" + s + "'");
  return v;
}

void check_id(const std::string& id) {
  require(!id.empty() && id.find_first_of(",\n\r \t") == std::string::npos,
          "sample id '" + id + "' must be nonempty without commas or whitespace");
}

// Returns data rows after checking the header.
std::vector<std::vector<std::string>> read_table(std::istream& in, const std::string& header, std::size_t columns) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "expected header '" + header + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == header, "expected header '" + header + "', got '" + line + "'");
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    require(cells.size() == columns, "line " + std::to_string(lineno) + ": expected " + std::to_string(columns) + " fields");
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string opt_cell(const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : std::string(); }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

void write_routing_records(std::ostream& out, std::span<const RoutingRecord> records) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["sample_id"] = r.sample_id;
    j["checkpoint_step"] = r.checkpoint_step;
    j["layer"] = r.layer;
    j["weights"] = r.weights;
    out << j.dump() << '\n';
  }
}

std::vector<RoutingRecord> read_routing_records(std::istream& in) {
  std::vector<RoutingRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RoutingRecord r;
      r.sample_id = j.at("sample_id").get<std::string>();
      r.checkpoint_step = j.at("checkpoint_step").get<std::int64_t>();
      r.layer = j.at("layer").get<std::size_t>();
      r.weights = j.at("weights").get<std::vector<double>>();
      require(!r.weights.empty(), "empty weight vector");
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("routing records line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("routing records line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

void write_norm_snapshots(std::ostream& out, std::span<const std::size_t> steps, std::span<const ParamNorms> norms) {
  require(steps.size() == norms.size(), "write_norm_snapshots: steps and snapshots differ in length");
  out << "step,param_type,norm\n";
  for (std::size_t t = 0; t < steps.size(); ++t)
    for (const auto& [type, values] : norms[t])
      for (double v : values) out << steps[t] << ',' << to_string(type) << ',' << format_double(v) << '\n';
}

std::pair<std::vector<std::int64_t>, std::vector<ParamNorms>> read_norm_snapshots(std::istream& in) {
  std::vector<std::int64_t> steps;
  std::vector<ParamNorms> snaps;
  for (const auto& row : read_table(in, "step,param_type,norm", 3)) {
    const std::int64_t step = parse_int(row[0], "norm snapshot step");
    if (steps.empty() || steps.back() != step) {
      require(steps.empty() || step > steps.back(), "norm snapshots: steps must be increasing");
      steps.push_back(step);
      snaps.emplace_back();
    }
    snaps.back()[param_type_from_string(row[1])].push_back(parse_double(row[2], "norm"));
  }
  return {steps, snaps};
}

void write_series(std::ostream& out, std::span<const CheckpointSeries> series) {
  out << "sample_id,step,value,kind\n";
  for (const auto& s : series) {
    check_id(s.sample_id);
    for (std::size_t i = 0; i < s.steps.size(); ++i)
      out << s.sample_id << ',' << s.steps[i] << ',' << format_double(s.values[i]) << ',' << to_string(s.kind) << '\n';
  }
}

std::vector<CheckpointSeries> read_series(std::istream& in) {
  std::vector<CheckpointSeries> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& row : read_table(in, "sample_id,step,value,kind", 4)) {
    check_id(row[0]);
    const SeriesKind kind = series_kind_from_string(row[3]);
    auto [it, inserted] = index.try_emplace(row[0], out.size());
    if (inserted) {
      out.emplace_back();
      out.back().sample_id = row[0];
      out.back().kind = kind;
    }
    CheckpointSeries& s = out[it->second];
    require(s.kind == kind, "series '" + row[0] + "': mixed kinds");
    s.steps.push_back(parse_int(row[1], "series step"));
    s.values.push_back(parse_double(row[2], "series value"));
  }
  for (const auto& s : out) s.validate();
  return out;
}

void write_detections(std::ostream& out, std::span<const DetectionRow> rows) {
  out << "sample_id,t_star,t_hash\n";
  for (const auto& r : rows) {
    check_id(r.sample_id);
    out << r.sample_id << ',' << opt_cell(r.t_star) << ',' << opt_cell(r.t_hash) << '\n';
  }
}

std::vector<DetectionRow> read_detections(std::istream& in) {
  std::vector<DetectionRow> rows;
  for (const auto& row : read_table(in, "sample_id,t_star,t_hash", 3)) {
    DetectionRow d;
    d.sample_id = row[0];
    if (!row[1].empty()) d.t_star = parse_int(row[1], "t_star");
    if (!row[2].empty()) d.t_hash = parse_int(row[2], "t_hash");
    rows.push_back(std::move(d));
  }
  return rows;
}

void write_group_manifest(std::ostream& out, const Grouping& grouping) {
  out << "group_key,sample_id\n";
  for (const auto& g : grouping.groups)
    for (const auto& id : g.members) out << g.key << ',' << id << '\n';
}

Grouping read_group_manifest(std::istream& in) {
  Grouping g;
  for (const auto& row : read_table(in, "group_key,sample_id", 2)) {
    const std::int64_t key = parse_int(row[0], "group key");
    check_id(row[1]);
    if (g.groups.empty() || g.groups.back().key != key) {
      require(g.groups.empty() || key > g.groups.back().key, "group manifest: keys must be increasing");
      g.groups.push_back({key, {}});
    }
    g.groups.back().members.push_back(row[1]);
  }
  return g;
}

void write_router_snapshots(std::ostream& out, std::span<const std::int64_t> steps,
                            std::span<const std::vector<Mat>> routers) {
  require(steps.size() == routers.size(), "write_router_snapshots: steps and snapshots differ in length");
  out << "checkpoint_step,layer,expert,component,value\n";
  for (std::size_t t = 0; t < steps.size(); ++t)
    for (std::size_t l = 0; l < routers[t].size(); ++l) {
      const Mat& w = routers[t][l];
      for (Eigen::Index k = 0; k < w.rows(); ++k)
        for (Eigen::Index j = 0; j < w.cols(); ++j)
          out << steps[t] << ',' << l << ',' << k << ',' << j << ',' << format_double(w(k, j)) << '\n';
    }
}

std::pair<std::vector<std::int64_t>, std::vector<std::vector<Mat>>> read_router_snapshots(std::istream& in) {
  struct Entry {
    std::size_t layer, expert, component;
    double value;
  };
  std::vector<std::int64_t> steps;
  std::vector<std::vector<Entry>> entries;
  for (const auto& row : read_table(in, "checkpoint_step,layer,expert,component,value", 5)) {
    const std::int64_t step = parse_int(row[0], "router step");
    if (steps.empty() || steps.back() != step) {
      require(steps.empty() || step > steps.back(), "router snapshots: steps must be increasing");
      steps.push_back(step);
      entries.emplace_back();
    }
    const auto layer = parse_int(row[1], "router layer");
    const auto expert = parse_int(row[2], "router expert");
    const auto component = parse_int(row[3], "router component");
    require(layer >= 0 && expert >= 0 && component >= 0, "router snapshots: negative index");
    entries.back().push_back({static_cast<std::size_t>(layer), static_cast<std::size_t>(expert),
                              static_cast<std::size_t>(component), parse_double(row[4], "router value")});
  }
  std::vector<std::vector<Mat>> routers;
  for (const auto& snap : entries) {
    std::size_t layers = 0, rows = 0, cols = 0;
    for (const auto& e : snap) {
      layers = std::max(layers, e.layer + 1);
      rows = std::max(rows, e.expert + 1);
      cols = std::max(cols, e.component + 1);
    }
    require(snap.size() == layers * rows * cols, "router snapshots: incomplete matrices");
    std::vector<Mat> mats(layers, Mat::Constant(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols),
                                                std::numeric_limits<double>::quiet_NaN()));
    for (const auto& e : snap)
      mats[e.layer](static_cast<Eigen::Index>(e.expert), static_cast<Eigen::Index>(e.component)) = e.value;
    for (const auto& m : mats) require(m.allFinite(), "router snapshots: missing or non-finite entries");
    routers.push_back(std::move(mats));
  }
  return {steps, routers};
}

void write_loss_summary(std::ostream& out, std::span<const LossRow> rows) {
  out << "step,train_loss,validation_loss\n";
  for (const auto& r : rows)
    out << r.step << ',' << format_double(r.train_loss) << ',' << format_double(r.validation_loss) << '\n';
}

std::vector<LossRow> read_loss_summary(std::istream& in) {
  std::vector<LossRow> rows;
  for (const auto& row : read_table(in, "step,train_loss,validation_loss", 3))
    rows.push_back({parse_int(row[0], "loss step"), parse_double(row[1], "train loss"),
                    parse_double(row[2], "validation loss")});
  return rows;
}

std::vector<std::pair<std::string, Vec>> read_embeddings(std::istream& in) {
  std::vector<std::pair<std::string, Vec>> rows;
  std::string line;
  std::size_t lineno = 0;
  Eigen::Index dim = -1;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string id;
    if (!(fields >> id)) continue;
    std::vector<double> values;
    std::string tok;
    while (fields >> tok) values.push_back(parse_double(tok, "embedding line " + std::to_string(lineno)));
    require(!values.empty(), "embedding line " + std::to_string(lineno) + ": no values");
    if (dim < 0) dim = static_cast<Eigen::Index>(values.size());
    require(static_cast<Eigen::Index>(values.size()) == dim, "embedding line " + std::to_string(lineno) + ": dimension mismatch");
    rows.emplace_back(id, Eigen::Map<const Vec>(values.data(), dim));
  }
  return rows;
}

void write_embeddings(std::ostream& out, std::span<const std::pair<std::string, Vec>> rows) {
  for (const auto& [id, v] : rows) {
    out << id;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v(i));
    out << '\n';
  }
}

}  // namespace routelab
